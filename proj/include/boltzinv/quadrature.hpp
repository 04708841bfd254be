#pragma once

#include <functional>

namespace boltzinv {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int evaluations = 0;
};

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over [a, b]:
/// the panel with the largest error estimate is bisected until the tolerance
/// or the interval budget is reached.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           double abs_tol = 1e-12, double rel_tol = 1e-10, int max_intervals = 4000);

/// Integral over [a, inf) via the map x = a + t / (1 - t).
QuadratureResult integrate_to_infinity(const std::function<double(double)>& f, double a,
                                       double abs_tol = 1e-12, double rel_tol = 1e-10);

}  // namespace boltzinv
