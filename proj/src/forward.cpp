#include "boltzinv/forward.hpp"

#include <cmath>
#include <fmt/format.h>

#include "boltzinv/convolution.hpp"
#include "boltzinv/errors.hpp"
#include "boltzinv/spaces.hpp"

namespace boltzinv {

namespace {

void check_order(int N_max) {
  if (N_max < 2 || N_max > 3) throw InputError(fmt::format("expansion order N_max must be 2 or 3, got {}", N_max));
}

void check_window(const ModelSetup& s, double z, bool force) {
  if (!force && !(z >= 0.0 && z < s.window.z_max_gas)) {
    throw PreconditionError(fmt::format("activity z = {:.6g} outside gas-phase window [0, {:.6g})", z,
                                        s.window.z_max_gas));
  }
}

RadialFunction symmetric_convolve(const RadialFunction& a, const RadialFunction& b) {
  // a * b + b * a, so derivatives match the discrete f * f exactly.
  const RadialFunction ab = radial_convolve(a, b);
  return ab.with_values(ab.values + radial_convolve(b, a).values);
}

// Pieces of y = 1 + z (f * f) / P with P = 1 + 2 z I1.
struct Cavity {
  RadialFunction f;
  double I1 = 0.0;
  RadialFunction ff;
  double P = 1.0;
};

Cavity cavity_parts(const RadialFunction& u, double beta, double z) {
  Cavity c;
  c.f = mayer_function(u, beta);
  c.I1 = c.f.integral();
  c.ff = radial_convolve(c.f, c.f);
  c.P = 1.0 + 2.0 * z * c.I1;
  if (!(c.P > 0.0)) {
    throw DomainError(fmt::format("density normalisation 1 + 2 z I1 = {:.6g} is not positive; use a smaller z", c.P));
  }
  return c;
}

// -beta e^{-beta u} v
RadialFunction mayer_derivative(const RadialFunction& u, const RadialFunction& v, double beta) {
  if (!u.compatible(v)) throw InputError("perturbation and potential live on different grids");
  return RadialFunction(u.grid, -beta * boltzmann_factor(u, beta) * v.values, std::min(u.tail_exponent, v.tail_exponent));
}

}  // namespace

DensityCoefficients density_coefficients(const RadialFunction& f) {
  DensityCoefficients c;
  c.I1 = f.integral();
  const RadialFunction ff = radial_convolve(f, f);
  const RadialFunction triangle(f.grid, f.values * ff.values, f.tail_exponent + ff.tail_exponent);
  c.d3 = 1.5 * c.I1 * c.I1 + 0.5 * triangle.integral();
  return c;
}

double density_rho0(const DensityCoefficients& c, double z, int order) {
  if (order < 1 || order > 3) throw InputError(fmt::format("density order must be 1, 2 or 3, got {}", order));
  double rho = z;
  if (order >= 2) rho += c.I1 * z * z;
  if (order >= 3) rho += c.d3 * z * z * z;
  return rho;
}

double density_rho0(const RadialFunction& f, double z, int order) {
  if (order < 3) {
    DensityCoefficients c;
    c.I1 = f.integral();
    return density_rho0(c, z, order);
  }
  return density_rho0(density_coefficients(f), z, order);
}

double density_rho0(const ModelSetup& s, double z, int order, bool force) {
  check_window(s, z, force);
  return density_rho0(s.f, z, order);
}

ForwardResult rdf_expansion(const RadialFunction& u, double beta, double z, int N_max) {
  check_order(N_max);
  if (!(z >= 0.0)) throw InputError("activity must be non-negative");
  ForwardResult res;
  res.order = N_max;
  const auto& grid = u.grid;
  const Eigen::Index n = u.size();
  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(n);  // y - 1
  RadialFunction f;
  double tail = u.tail_exponent;
  if (N_max == 2) {
    f = mayer_function(u, beta);
    res.rho0 = z;
  } else {
    const Cavity c = cavity_parts(u, beta, z);
    f = c.f;
    x = z * c.ff.values / c.P;
    tail = std::min(tail, c.ff.tail_exponent);
    res.rho0 = density_rho0(DensityCoefficients{c.I1, 0.0}, z, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(1.0 + x[i] > 0.0)) {
        throw DomainError(fmt::format(
            "truncated expansion gives a non-positive cavity function at r = {:.6g}; use a smaller z", grid->nodes()[i]));
      }
    }
  }
  const Eigen::ArrayXd boltz = boltzmann_factor(u, beta);
  Eigen::ArrayXd log_y = x.unaryExpr([](double t) { return std::log1p(t); });
  res.y = RadialFunction(grid, 1.0 + x, 0.0);
  res.log_y = RadialFunction(grid, std::move(log_y), tail);
  res.g = RadialFunction(grid, boltz * (1.0 + x), 0.0);
  res.h = RadialFunction(grid, f.values + x * boltz, tail);
  return res;
}

ForwardResult rdf_expansion(const ModelSetup& s, double z, int N_max, bool force) {
  check_window(s, z, force);
  return rdf_expansion(s.u, s.beta, z, N_max);
}

RadialFunction rdf_via_ursell(const RadialFunction& u, double beta, double z) {
  const RadialFunction f = mayer_function(u, beta);
  const double I1 = f.integral();
  const RadialFunction ff = radial_convolve(f, f);
  const Eigen::ArrayXd a3 = 2.0 * I1 * f.values + ff.values * (1.0 + f.values);
  const Eigen::ArrayXd g = 1.0 + (z * z * f.values + z * z * z * a3) / (z * z + 2.0 * z * z * z * I1);
  return RadialFunction(u.grid, g, 0.0);
}

InequalityReport cavity_lower_bound_check(const ForwardResult& result, const EnsembleParams& ens) {
  const double z = ens.z;
  if (z > ens.z_max_strict) {
    throw PreconditionError(fmt::format("activity z = {:.6g} exceeds the strict window z_max_strict = {:.6g}", z,
                                        ens.z_max_strict));
  }
  const double K = ens.c_beta * std::exp(2.0 * ens.beta * ens.B + 1.0);
  const double bracket = 1.0 - z * std::exp(1.0) * K / (1.0 - z * K);
  const double bound = (z * z) / (result.rho0 * result.rho0) * bracket;
  const bool with_errors = result.g_stderr.size() == result.y.size();
  double min_y = std::numeric_limits<double>::infinity();
  double worst_r = 0.0;
  bool pass = bracket > 0.0;
  for (Eigen::Index i = 0; i < result.y.size(); ++i) {
    if (!result.missing.empty() && result.missing[i]) continue;
    const double y = result.y[i];
    double tolerance = 0.0;
    if (with_errors && result.g[i] > 0.0) tolerance = 3.0 * result.g_stderr[i] * y / result.g[i];
    if (y < min_y) {
      min_y = y;
      worst_r = result.y.r(i);
    }
    if (y + tolerance < bound) pass = false;
  }
  // Reported as bound <= min y.
  return InequalityReport::make("cavity_lower_bound", bound, min_y, pass,
                                fmt::format("bracket {:.6g}, min y at r = {:.4g}", bracket, worst_r));
}

CavityBase prepare_cavity(const RadialFunction& u, double beta, double z) {
  const Cavity c = cavity_parts(u, beta, z);
  CavityBase b;
  b.u = u;
  b.beta = beta;
  b.z = z;
  b.f = c.f;
  b.boltz = boltzmann_factor(u, beta);
  b.I1 = c.I1;
  b.ff = c.ff;
  b.P = c.P;
  b.y = 1.0 + z * c.ff.values / c.P;
  for (Eigen::Index i = 0; i < b.y.size(); ++i) {
    if (!(b.y[i] > 0.0)) {
      throw DomainError(fmt::format(
          "truncated expansion gives a non-positive cavity function at r = {:.6g}; use a smaller z", u.r(i)));
    }
  }
  return b;
}

RadialFunction cavity_difference(const CavityBase& c, const RadialFunction& v) {
  if (!c.f.compatible(v)) throw InputError("perturbation and potential live on different grids");
  const double z = c.z;
  Eigen::ArrayXd dfv = c.boltz;
  for (Eigen::Index i = 0; i < dfv.size(); ++i) dfv[i] *= std::expm1(-c.beta * v[i]);
  const RadialFunction df(c.f.grid, std::move(dfv), std::min(c.f.tail_exponent, v.tail_exponent));
  const double dI1 = df.integral();
  const Eigen::ArrayXd dff = symmetric_convolve(c.f, df).values + radial_convolve(df, df).values;
  const double P_new = c.P + 2.0 * z * dI1;
  if (!(P_new > 0.0)) throw DomainError("density normalisation of the perturbed potential is not positive");
  // z (ff + dff) / P_new - z ff / P
  const Eigen::ArrayXd dy = z * (dff * c.P - c.ff.values * 2.0 * z * dI1) / (c.P * P_new);
  return RadialFunction(c.f.grid, dy, std::min(df.tail_exponent, c.ff.tail_exponent));
}

RadialFunction cavity_derivative(const CavityBase& c, const RadialFunction& v) {
  const RadialFunction df = mayer_derivative(c.u, v, c.beta);
  const double z = c.z;
  const double dI1 = df.integral();
  const Eigen::ArrayXd dff = symmetric_convolve(c.f, df).values;
  const Eigen::ArrayXd dy = z * dff / c.P - z * c.ff.values * 2.0 * z * dI1 / (c.P * c.P);
  return RadialFunction(c.f.grid, dy, std::min(df.tail_exponent, c.ff.tail_exponent));
}

RadialFunction cavity_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z,
                                 int N_max) {
  check_order(N_max);
  if (N_max == 2) return RadialFunction::zero(u.grid, kCompactTail);
  return cavity_difference(prepare_cavity(u, beta, z), v);
}

RadialFunction cavity_derivative(const RadialFunction& u, const RadialFunction& v, double beta, double z,
                                 int N_max) {
  check_order(N_max);
  if (N_max == 2) return RadialFunction::zero(u.grid, kCompactTail);
  return cavity_derivative(prepare_cavity(u, beta, z), v);
}

RadialFunction forward_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z,
                                  int N_max) {
  const ForwardResult base = rdf_expansion(u, beta, z, N_max);
  const RadialFunction dy = cavity_difference(u, v, beta, z, N_max);
  Eigen::ArrayXd d = boltzmann_factor(u, beta);
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double y_new = base.y[i] + dy[i];
    d[i] *= std::expm1(-beta * v[i]) * y_new + dy[i];
  }
  return RadialFunction(u.grid, std::move(d), std::min({base.h.tail_exponent, v.tail_exponent, dy.tail_exponent}));
}

RadialFunction frechet_F(const RadialFunction& u, const RadialFunction& v, double beta, double z, int N_max) {
  const ForwardResult base = rdf_expansion(u, beta, z, N_max);
  const RadialFunction df = mayer_derivative(u, v, beta);
  const RadialFunction dy = cavity_derivative(u, v, beta, z, N_max);
  const Eigen::ArrayXd d = df.values * base.y.values + boltzmann_factor(u, beta) * dy.values;
  return RadialFunction(u.grid, d, std::min(df.tail_exponent, dy.tail_exponent));
}

void require_small_perturbation(const ModelSetup& s, const RadialFunction& v) {
  const double nv = norm_vu(v, s.u, s.params().r0, s.alpha());
  if (nv > 0.5 * s.radius.delta0 * (1.0 + 1e-12)) {
    throw PreconditionError(
        fmt::format("perturbation norm {:.4g} exceeds delta0/2 = {:.4g}", nv, 0.5 * s.radius.delta0));
  }
}

RadialFunction frechet_F(const ModelSetup& s, const RadialFunction& v, double z, int N_max) {
  require_small_perturbation(s, v);
  return frechet_F(s.u, v, s.beta, z, N_max);
}

}  // namespace boltzinv
