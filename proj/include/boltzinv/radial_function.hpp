#pragma once

#include <Eigen/Core>
#include <limits>

#include "boltzinv/grid.hpp"

namespace boltzinv {

inline constexpr double kCompactTail = std::numeric_limits<double>::infinity();

/// A radially symmetric function of r >= 0 tabulated on a RadialGrid.
///
/// Beyond r_max the function continues as the power law
/// values[last] * (r_max / r)^tail_exponent; an infinite exponent means the
/// function vanishes there and exponent 0 holds it constant (g, y). Below the first node it is held constant.
struct RadialFunction {
  GridPtr grid;
  Eigen::ArrayXd values;
  double tail_exponent = kCompactTail;

  RadialFunction() = default;
  RadialFunction(GridPtr g, Eigen::ArrayXd v, double tail = kCompactTail);

  static RadialFunction zero(GridPtr g, double tail = kCompactTail);

  template <typename F>
  static RadialFunction from(GridPtr g, F&& fn, double tail = kCompactTail) {
    Eigen::ArrayXd v(g->size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = fn((*g)[i]);
    return RadialFunction(std::move(g), std::move(v), tail);
  }

  Eigen::Index size() const { return values.size(); }
  double r(Eigen::Index i) const { return (*grid)[i]; }
  double operator[](Eigen::Index i) const { return values[i]; }

  /// Same grid and tail, new node values.
  RadialFunction with_values(Eigen::ArrayXd v) const { return {grid, std::move(v), tail_exponent}; }

  /// Value at an arbitrary radius under the representation conventions.
  double at(double r) const;

  /// Signed integral over R^3 including the analytic tail beyond r_max.
  double integral() const;
  /// L1 norm over R^3 including the analytic tail beyond r_max.
  double l1_norm() const;
  /// Contribution of the analytic tail of |x| beyond r_max to the L1 norm.
  double tail_l1() const;

  bool compatible(const RadialFunction& other) const;
};

/// 4 pi R^3 / (p - 3) * |x_last|: L1 mass of the power tail beyond R.
double power_tail_mass(double last_value, double r_max, double exponent);

RadialFunction operator+(const RadialFunction& a, const RadialFunction& b);
RadialFunction operator-(const RadialFunction& a, const RadialFunction& b);
RadialFunction operator*(double s, const RadialFunction& a);

/// Linear interpolation of `f` onto another grid (tail preserved).
RadialFunction regrid(const RadialFunction& f, GridPtr target);

}  // namespace boltzinv
