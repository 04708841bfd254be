#include "boltzinv/potentials.hpp"

#include <algorithm>
#include <fmt/format.h>
#include <numbers>

#include "boltzinv/errors.hpp"
#include "boltzinv/spaces.hpp"

namespace boltzinv {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
}  // namespace

void LJTypeParams::validate() const {
  if (!(alpha > 3.0)) throw InputError(fmt::format("alpha must exceed 3, got {}", alpha));
  if (!(r0 > 0.0)) throw InputError(fmt::format("r0 must be positive, got {}", r0));
  if (!(c0 > 0.0 && c0 < C0)) throw InputError(fmt::format("need 0 < c0 < C0, got c0={} C0={}", c0, C0));
}

Potential::Potential(Form form, LJTypeParams params) : form_(std::move(form)), params_(params) {
  params_.validate();
}

Potential Potential::lj(double epsilon, double sigma, LJTypeParams params) {
  if (!(sigma > 0.0)) throw InputError("sigma must be positive");
  return {LennardJones{epsilon, sigma}, params};
}

Potential Potential::power_law(double amplitude, double exponent, LJTypeParams params) {
  return {PowerLaw{amplitude, exponent}, params};
}

Potential Potential::zero(LJTypeParams params) { return {ZeroPotential{}, params}; }

Potential Potential::tabulated(RadialFunction table, LJTypeParams params) {
  if (!table.values.allFinite()) throw InputError("tabulated potential has non-finite values");
  return {TabulatedPotential{std::move(table)}, params};
}

double Potential::operator()(double r) const {
  return std::visit(
      overloaded{
          [r](const LennardJones& lj) {
            return r <= 0.0 ? kInf : lennard_jones(r, lj.epsilon, lj.sigma);
          },
          [r](const PowerLaw& pl) { return r <= 0.0 ? kInf : pl.amplitude * std::pow(r, -pl.exponent); },
          [](const ZeroPotential&) { return 0.0; },
          [r, this](const TabulatedPotential& t) {
            const double r1 = t.table.grid->r_min();
            if (r >= r1) return t.table.at(r);
            const double u1 = t.table.values[0];
            if (u1 <= 0.0) return u1;
            return r <= 0.0 ? kInf : u1 * std::pow(r1 / r, params_.alpha);
          },
      },
      form_);
}

RadialFunction Potential::sample(GridPtr grid) const {
  if (const auto* t = std::get_if<TabulatedPotential>(&form_); t && t->table.grid->same_nodes(*grid)) {
    return RadialFunction(std::move(grid), t->table.values, t->table.tail_exponent);
  }
  const double tail = tail_exponent();
  return RadialFunction::from(std::move(grid), [this](double r) { return (*this)(r); }, tail);
}

double Potential::tail_exponent() const {
  return std::visit(overloaded{
                        [](const LennardJones&) { return 6.0; },
                        [](const PowerLaw& pl) { return pl.exponent; },
                        [](const ZeroPotential&) { return kCompactTail; },
                        [](const TabulatedPotential& t) { return t.table.tail_exponent; },
                    },
                    form_);
}

std::string Potential::describe() const {
  return std::visit(
      overloaded{
          [](const LennardJones& lj) { return fmt::format("lj12-6(epsilon={}, sigma={})", lj.epsilon, lj.sigma); },
          [](const PowerLaw& pl) { return fmt::format("power(A={}, p={})", pl.amplitude, pl.exponent); },
          [](const ZeroPotential&) { return std::string("zero"); },
          [](const TabulatedPotential& t) { return fmt::format("tabulated({} nodes)", t.table.size()); },
      },
      form_);
}

CertificationReport certify_lj_type(const Potential& u, const LJTypeParams& p, const RadialGrid& grid) {
  p.validate();
  if (grid.r_min() > p.r0) {
    throw InputError(fmt::format("grid starts at {} and does not cover the core region (0, {}]", grid.r_min(), p.r0));
  }
  if (grid.r_max() < 10.0 * p.r0) {
    throw InputError(fmt::format("grid ends at {}, need r_max >= 10 r0 = {}", grid.r_max(), 10.0 * p.r0));
  }
  CertificationReport rep;
  rep.c = kInf;
  rep.C = 0.0;
  auto visit_point = [&](double r) {
    const double ur = u(r);
    const double scaled = ur * std::pow(r, p.alpha);
    if (r <= p.r0 && !(scaled >= rep.c)) {
      rep.c = std::isnan(scaled) ? -kInf : scaled;
      rep.r_core_worst = r;
    }
    if (r >= p.r0 && !(std::abs(scaled) <= rep.C)) {
      rep.C = std::isnan(scaled) ? kInf : std::abs(scaled);
      rep.r_tail_worst = r;
    }
  };
  const auto& r = grid.nodes();
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    visit_point(r[i]);
    if (i + 1 < grid.size()) visit_point(0.5 * (r[i] + r[i + 1]));
  }
  visit_point(p.r0);
  const double tail = u.tail_exponent();
  if (tail < p.alpha && u(grid.r_max()) != 0.0) {
    rep.C = kInf;
    rep.r_tail_worst = kInf;
  } else if (!std::holds_alternative<TabulatedPotential>(u.form())) {
    // Analytic forms: probe the approach to the asymptotic envelope.
    for (double s = 2.0; s <= 1024.0; s *= 2.0) visit_point(s * grid.r_max());
  }
  rep.core_pass = rep.c > p.c0;
  rep.tail_pass = rep.C < p.C0;
  rep.pass = rep.core_pass && rep.tail_pass;
  if (rep.pass) {
    rep.message = fmt::format("admissible: c = {:.6g} > c0 = {}, C = {:.6g} < C0 = {}", rep.c, p.c0, rep.C, p.C0);
  } else {
    rep.message.clear();
    if (!rep.core_pass) {
      rep.message += fmt::format("core branch fails: inf u r^alpha = {:.6g} at r = {:.6g}, need > c0 = {}; ",
                                 rep.c, rep.r_core_worst, p.c0);
    }
    if (!rep.tail_pass) {
      rep.message += fmt::format("tail branch fails: sup |u| r^alpha = {:.6g} at r = {:.6g}, need < C0 = {}; ",
                                 rep.C, rep.r_tail_worst, p.C0);
    }
  }
  return rep;
}

bool Configuration::valid() const {
  if (!(box_half_width > 0.0) || !coordinates.allFinite()) return false;
  return (coordinates.array().abs() <= box_half_width).all();
}

double total_energy(const Potential& u, const Configuration& cfg) {
  if (!cfg.valid()) throw InputError("configuration has coordinates outside its box");
  double e = 0.0;
  const Eigen::Index n = cfg.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (cfg.coordinates.col(i) - cfg.coordinates.col(j)).norm();
      if (d == 0.0) return kInf;
      e += u(d);
    }
  }
  return e;
}

Eigen::ArrayXd boltzmann_factor(const RadialFunction& u, double beta) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  return u.values.unaryExpr([beta](double x) { return std::exp(-beta * x); });
}

RadialFunction mayer_function(const RadialFunction& u, double beta) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  Eigen::ArrayXd f = u.values.unaryExpr([beta](double x) { return std::expm1(-beta * x); });
  return u.with_values(std::move(f));
}

RadialFunction mayer_function(const Potential& u, double beta, GridPtr grid) {
  return mayer_function(u.sample(std::move(grid)), beta);
}

MayerBound c_beta_bound(const RadialFunction& f) {
  if (f.values.isZero(0.0)) return {0.0, 0.0, true};
  if (f.values[f.size() - 1] != 0.0 && !(f.tail_exponent > 3.0)) {
    throw InputError(fmt::format("Mayer function tail r^-{} is not integrable", f.tail_exponent));
  }
  const double l1 = f.l1_norm();
  return {1.01 * l1, l1, false};
}

GasPhaseBounds gas_phase_bounds(double c_beta, double B, double beta) {
  if (!(c_beta > 0.0) || !(B >= 0.0) || !(beta > 0.0)) {
    throw InputError("gas-phase bounds need c_beta > 0, B >= 0, beta > 0");
  }
  const double gas = 1.0 / (c_beta * std::exp(2.0 * beta * B + 1.0));
  return {gas, gas / (1.0 + std::numbers::e)};
}

EnsembleParams make_ensemble(double beta, double z, double c_beta, double B) {
  const auto b = gas_phase_bounds(c_beta, B, beta);
  return {beta, z, c_beta, B, b.z_max_gas, b.z_max_strict};
}

double perturbation_weight_constant(double beta, double B, double c_beta, double r0, double alpha,
                                    double delta) {
  const double a = beta * std::exp(2.0 * beta * B);
  const double b = rho_weight(r0, alpha) / (std::numbers::e * (1.0 - delta) * c_beta);
  return 1.01 * std::max(a, b);
}

double q_of_delta(double f_l1, double c_beta, double C_beta, double delta, double c_rho) {
  return f_l1 / c_beta + C_beta * delta * c_rho;
}

PerturbationRadius perturbation_radius(const RadialFunction& u, const LJTypeParams& p, double beta,
                                       double c_beta, double f_l1, double B,
                                       const PerturbationRadiusOptions& opt) {
  p.validate();
  if (!(c_beta > f_l1)) throw PreconditionError("c_beta must strictly exceed the Mayer L1 norm");
  const double c_rho = embedding_constant_c_rho(p.alpha);
  const auto& r = u.grid->nodes();

  // Extreme perturbations: u - delta|u| decides the core, |u| + delta/rho the tail.
  double core_c = kInf;
  double tail_u = 0.0;
  std::vector<std::pair<double, double>> tail_pts;  // (r^alpha, |u| r^alpha)
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double ra = std::pow(r[i], p.alpha);
    if (r[i] <= p.r0) core_c = std::min(core_c, u.values[i] * ra);
    if (r[i] >= p.r0) tail_pts.emplace_back(r[i], std::abs(u.values[i]) * ra);
  }
  for (const auto& [ri, s] : tail_pts) tail_u = std::max(tail_u, s);
  auto certified = [&](double delta) {
    if ((1.0 - delta) * core_c <= p.c0) return false;
    double worst = 0.0;
    for (const auto& [ri, s] : tail_pts) {
      worst = std::max(worst, s + delta * std::pow(ri, p.alpha) / rho_weight(ri, p.alpha));
    }
    return worst < p.C0;
  };

  PerturbationRadius out;
  out.q0 = f_l1 / c_beta;
  const double q_cap = out.q0 + opt.slack_fraction * (1.0 - out.q0);
  auto q_at = [&](double delta) {
    const double Cb = perturbation_weight_constant(beta, B, c_beta, p.r0, p.alpha, delta);
    return q_of_delta(f_l1, c_beta, Cb, delta, c_rho);
  };
  auto feasible = [&](double delta) {
    const double q = q_at(delta);
    out.q_curve.emplace_back(delta, q);
    return certified(delta) && q <= q_cap && q < 1.0;
  };

  double lo = 0.0;
  double hi = 1.0;
  for (double d = 0.5; d >= 1e-15; d *= 0.5) {
    if (feasible(d)) {
      lo = d;
      break;
    }
    hi = d;
  }
  if (lo == 0.0) {
    std::string curve;
    for (const auto& [d, q] : out.q_curve) curve += fmt::format(" ({:.3g}, {:.6g})", d, q);
    throw DomainError("no admissible perturbation radius in (0, 1); q(delta) curve:" + curve);
  }
  while ((hi - lo) > opt.rel_tol * lo) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) lo = mid;
    else hi = mid;
  }
  out.delta0 = lo;
  out.C_beta = perturbation_weight_constant(beta, B, c_beta, p.r0, p.alpha, lo);
  out.q = q_at(lo);
  return out;
}

}  // namespace boltzinv
