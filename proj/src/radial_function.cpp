#include "boltzinv/radial_function.hpp"

#include <cmath>
#include <numbers>

#include "boltzinv/errors.hpp"

namespace boltzinv {

RadialFunction::RadialFunction(GridPtr g, Eigen::ArrayXd v, double tail)
    : grid(std::move(g)), values(std::move(v)), tail_exponent(tail) {
  if (!grid) throw InputError("radial function without grid");
  if (values.size() != grid->size()) throw InputError("radial function size does not match its grid");
  if (!(tail_exponent >= 0.0)) throw InputError("tail exponent must be non-negative");
}

RadialFunction RadialFunction::zero(GridPtr g, double tail) {
  const auto n = g->size();
  return RadialFunction(std::move(g), Eigen::ArrayXd::Zero(n), tail);
}

double RadialFunction::at(double r) const {
  const Eigen::Index n = size();
  const Eigen::Index i = grid->locate(r);
  if (i < 0) return values[0];
  if (i >= n - 1) {
    const double rmax = grid->r_max();
    if (r <= rmax || values[n - 1] == 0.0) return values[n - 1];
    if (std::isinf(tail_exponent)) return 0.0;
    return values[n - 1] * std::pow(rmax / r, tail_exponent);
  }
  const double r_lo = (*grid)[i];
  const double t = (r - r_lo) / ((*grid)[i + 1] - r_lo);
  return (1.0 - t) * values[i] + t * values[i + 1];
}

double power_tail_mass(double last_value, double r_max, double exponent) {
  if (last_value == 0.0 || std::isinf(exponent)) return 0.0;
  if (!(exponent > 3.0)) throw InputError("tail exponent must exceed 3 for an integrable tail");
  return 4.0 * std::numbers::pi * std::abs(last_value) * r_max * r_max * r_max / (exponent - 3.0);
}

double RadialFunction::tail_l1() const {
  return power_tail_mass(values[size() - 1], grid->r_max(), tail_exponent);
}

double RadialFunction::integral() const {
  const double tail = tail_l1();
  const double sign = values[size() - 1] < 0.0 ? -1.0 : 1.0;
  return (grid->volume_weights() * values).sum() + sign * tail;
}

double RadialFunction::l1_norm() const {
  return (grid->volume_weights() * values.abs()).sum() + tail_l1();
}

bool RadialFunction::compatible(const RadialFunction& other) const {
  return grid && other.grid && (grid == other.grid || grid->same_nodes(*other.grid));
}

namespace {
void require_compatible(const RadialFunction& a, const RadialFunction& b) {
  if (!a.compatible(b)) throw InputError("radial functions live on different grids");
}
}  // namespace

RadialFunction operator+(const RadialFunction& a, const RadialFunction& b) {
  require_compatible(a, b);
  return {a.grid, a.values + b.values, std::min(a.tail_exponent, b.tail_exponent)};
}

RadialFunction operator-(const RadialFunction& a, const RadialFunction& b) {
  require_compatible(a, b);
  return {a.grid, a.values - b.values, std::min(a.tail_exponent, b.tail_exponent)};
}

RadialFunction operator*(double s, const RadialFunction& a) { return a.with_values(s * a.values); }

RadialFunction regrid(const RadialFunction& f, GridPtr target) {
  Eigen::ArrayXd v(target->size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = f.at((*target)[i]);
  return RadialFunction(std::move(target), std::move(v), f.tail_exponent);
}

}  // namespace boltzinv
