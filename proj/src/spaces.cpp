#include "boltzinv/spaces.hpp"

#include <fmt/format.h>
#include <limits>
#include <numbers>
#include <vector>

#include "boltzinv/errors.hpp"
#include "boltzinv/quadrature.hpp"

namespace boltzinv {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Value at the midpoint of panel [i, i+1]: cubic through the four surrounding
// nodes where they exist, linear at the ends of the grid.
double midpoint_value(const Eigen::ArrayXd& r, const Eigen::ArrayXd& v, Eigen::Index i) {
  const double x = 0.5 * (r[i] + r[i + 1]);
  if (i == 0 || i + 2 >= r.size()) return 0.5 * (v[i] + v[i + 1]);
  double sum = 0.0;
  for (Eigen::Index a = i - 1; a <= i + 2; ++a) {
    double l = 1.0;
    for (Eigen::Index b = i - 1; b <= i + 2; ++b) {
      if (b != a) l *= (x - r[b]) / (r[a] - r[b]);
    }
    sum += l * v[a];
  }
  return sum;
}

bool tail_diverges(const RadialFunction& w, double alpha) {
  return w.values[w.size() - 1] != 0.0 && w.tail_exponent < alpha;
}

// Supremum of samples s_k taken at increasing abscissae x_k. Each interior
// local maximum is refined by the vertex of the parabola through it and its
// two neighbours.
double refined_sup(const std::vector<double>& x, const std::vector<double>& s) {
  double best = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    best = std::max(best, s[k]);
    if (k == 0 || k + 1 >= s.size() || s[k] < s[k - 1] || s[k] < s[k + 1]) continue;
    const double d1 = (s[k] - s[k - 1]) / (x[k] - x[k - 1]);
    const double d2 = (s[k + 1] - s[k]) / (x[k + 1] - x[k]);
    const double a = (d2 - d1) / (x[k + 1] - x[k - 1]);
    if (!(a < 0.0)) continue;
    const double xv = 0.5 * (x[k - 1] + x[k]) - d1 / (2.0 * a);
    if (xv <= x[k - 1] || xv >= x[k + 1]) continue;
    best = std::max(best, s[k - 1] + d1 * (xv - x[k - 1]) + a * (xv - x[k - 1]) * (xv - x[k]));
  }
  return best;
}

// Sup of g(r_i, i) over nodes i in [lo, hi) and the midpoints between them,
// where `at_mid(i)` supplies the sample on panel [i, i+1].
template <typename Node, typename Mid>
double sup_nodes_and_midpoints(const Eigen::ArrayXd& r, Eigen::Index lo, Eigen::Index hi, Node&& at_node,
                               Mid&& at_mid) {
  std::vector<double> x, s;
  x.reserve(2 * (hi - lo));
  s.reserve(2 * (hi - lo));
  for (Eigen::Index i = lo; i < hi; ++i) {
    x.push_back(r[i]);
    s.push_back(at_node(i));
    if (i + 1 < hi) {
      x.push_back(0.5 * (r[i] + r[i + 1]));
      s.push_back(at_mid(i));
    }
  }
  return refined_sup(x, s);
}

double weighted_sup(const RadialFunction& w, double alpha, Eigen::Index lo) {
  const auto& r = w.grid->nodes();
  return sup_nodes_and_midpoints(
      r, lo, w.size(), [&](Eigen::Index i) { return rho_weight(r[i], alpha) * std::abs(w.values[i]); },
      [&](Eigen::Index i) {
        return rho_weight(0.5 * (r[i] + r[i + 1]), alpha) * std::abs(midpoint_value(r, w.values, i));
      });
}

}  // namespace

double norm_linf_rho(const RadialFunction& w, double alpha) {
  if (tail_diverges(w, alpha)) return kInf;
  return weighted_sup(w, alpha, 0);
}

double norm_vu_tail(const RadialFunction& v, double r0, double alpha) {
  if (tail_diverges(v, alpha)) return kInf;
  Eigen::Index first = v.grid->locate(r0);
  if (first < 0) first = 0;
  double best = weighted_sup(v, alpha, first + 1);
  // The panel straddling r0 contributes through the interpolated value at r0.
  best = std::max(best, rho_weight(r0, alpha) * std::abs(v.at(r0)));
  return best;
}

double norm_vu(const RadialFunction& v, const RadialFunction& u, double r0, double alpha) {
  if (!v.compatible(u)) throw InputError("perturbation and potential live on different grids");
  const auto& r = v.grid->nodes();
  Eigen::Index n_core = 0;
  while (n_core < v.size() && r[n_core] <= r0) {
    if (u.values[n_core] == 0.0) {
      throw PreconditionError(fmt::format(
          "potential vanishes at core node {} (r = {:.6g}); perturbation norm undefined", n_core, r[n_core]));
    }
    ++n_core;
  }
  const double core = sup_nodes_and_midpoints(
      r, 0, n_core, [&](Eigen::Index i) { return std::abs(v.values[i] / u.values[i]); },
      [&](Eigen::Index i) { return std::abs(midpoint_value(r, v.values, i) / midpoint_value(r, u.values, i)); });
  return std::max(core, norm_vu_tail(v, r0, alpha));
}

double embedding_constant_c_rho(double alpha) {
  if (!(alpha > 3.0)) throw InputError("embedding constant diverges for alpha <= 3");
  // [0, 1] directly; [1, inf) through r = 1/s and s = t^m, which turns the
  // integrable endpoint singularity s^(alpha-4) into the smooth m t.
  auto inner = [alpha](double r) { return r * r * std::pow(1.0 + r * r, -0.5 * alpha); };
  const double m = 2.0 / (alpha - 3.0);
  auto outer = [alpha, m](double t) {
    if (t == 0.0) return 0.0;
    const double s = std::pow(t, m);
    return m * t * std::pow(1.0 + s * s, -0.5 * alpha);
  };
  const double a = integrate(inner, 0.0, 1.0, 1e-15, 1e-14).value;
  const double b = integrate(outer, 0.0, 1.0, 1e-15, 1e-14).value;
  return 4.0 * std::numbers::pi * (a + b);
}

}  // namespace boltzinv
