#pragma once

// Shared, lazily built model setups. Building one runs the stability search,
// so tests reuse a single instance per configuration.

#include <cmath>
#include <vector>

#include "boltzinv/setup.hpp"
#include "boltzinv/spaces.hpp"

namespace fixture {

inline boltzinv::LJTypeParams reference_params() {
  boltzinv::LJTypeParams p;
  p.alpha = 6.0;
  p.r0 = 0.9;
  p.c0 = 0.1;
  p.C0 = 100.0;
  return p;
}

inline constexpr double kReferenceBeta = 0.1;

/// 12-6 Lennard-Jones (epsilon = sigma = 1) at beta = 0.1 on the default grid.
inline const boltzinv::ModelSetup& reference_setup() {
  static const boltzinv::ModelSetup s = [] {
    const auto p = reference_params();
    return boltzinv::make_setup(boltzinv::Potential::lj(1.0, 1.0, p), kReferenceBeta, boltzinv::default_grid(p));
  }();
  return s;
}

/// Smooth perturbation sin(1.7 r + phase) e^{-r/5} / rho scaled to `norm` in V_u.
inline boltzinv::RadialFunction bump(const boltzinv::ModelSetup& s, double norm, double phase = 0.0) {
  const double alpha = s.alpha();
  auto v = boltzinv::RadialFunction::from(
      s.grid,
      [&](double r) { return std::sin(1.7 * r + phase) * std::exp(-0.2 * r) / boltzinv::rho_weight(r, alpha); },
      alpha);
  const double n = boltzinv::norm_vu(v, s.u, s.params().r0, alpha);
  return (norm / n) * v;
}

/// Log-log slope between the first and last point.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  return std::log(y.front() / y.back()) / std::log(x.front() / x.back());
}

}  // namespace fixture
