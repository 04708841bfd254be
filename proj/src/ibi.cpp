#include "boltzinv/ibi.hpp"

#include <cmath>
#include <fmt/format.h>
#include <random>

#include "boltzinv/errors.hpp"
#include "boltzinv/spaces.hpp"

namespace boltzinv {

LogRdf LogRdf::from_g(const RadialFunction& g, double floor, const std::vector<bool>& missing) {
  const Eigen::Index n = g.size();
  if (!missing.empty() && static_cast<Eigen::Index>(missing.size()) != n) {
    throw InputError("missing-bin mask does not match the RDF grid");
  }
  LogRdf out;
  Eigen::ArrayXd e = Eigen::ArrayXd::Zero(n);
  out.mask.assign(n, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const bool usable = (missing.empty() || !missing[i]) && g[i] > floor && std::isfinite(g[i]);
    out.mask[i] = usable;
    if (usable) e[i] = -std::log(g[i]);
  }
  out.exponent = RadialFunction(g.grid, std::move(e), kCompactTail);
  out.log_y = RadialFunction::zero(g.grid);
  return out;
}

LogRdf LogRdf::from_forward(const ForwardResult& r, const RadialFunction& u, double beta) {
  if (r.backend == "gcmc") return from_g(r.g, 0.0, r.missing);
  if (!u.compatible(r.g)) throw InputError("potential and forward result live on different grids");
  LogRdf out;
  out.exponent = u.with_values(beta * u.values);
  out.log_y = r.log_y;
  out.mask.assign(u.size(), true);
  return out;
}

namespace {

Eigen::Index first_usable(const std::vector<bool>& mask) {
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) return static_cast<Eigen::Index>(i);
  return -1;
}

// Fills unusable bins: power continuation u_b (r_b / r)^alpha below the first
// usable bin, linear interpolation between usable bins, power decay after the
// last one.
void fill_gaps(Eigen::ArrayXd& u, const RadialGrid& grid, const std::vector<bool>& usable, double alpha) {
  const Eigen::Index n = u.size();
  const Eigen::Index b = first_usable(usable);
  if (b < 0) throw InputError("no usable bins in the target RDF");
  for (Eigen::Index i = 0; i < b; ++i) u[i] = u[b] * std::pow(grid[b] / grid[i], alpha);
  Eigen::Index last = b;
  for (Eigen::Index i = b + 1; i < n; ++i) {
    if (!usable[i]) continue;
    for (Eigen::Index k = last + 1; k < i; ++k) {
      const double t = (grid[k] - grid[last]) / (grid[i] - grid[last]);
      u[k] = (1.0 - t) * u[last] + t * u[i];
    }
    last = i;
  }
  for (Eigen::Index k = last + 1; k < n; ++k) u[k] = u[last] * std::pow(grid[last] / grid[k], alpha);
}

CertificationReport certify_table(const RadialFunction& u, const LJTypeParams& params) {
  const Potential pot = Potential::tabulated(u, params);
  const RadialGrid& g = *u.grid;
  if (g.r_min() <= params.r0 && g.r_max() >= 10.0 * params.r0) return certify_lj_type(pot, params, g);
  return certify_lj_type(pot, params, *default_grid(params));
}

std::vector<bool> both(const LogRdf& a, const LogRdf& b) {
  if (!a.exponent.compatible(b.exponent)) throw InputError("model and target RDF live on different grids");
  std::vector<bool> m(a.mask.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = a.mask[i] && b.mask[i];
  return m;
}

// log(g_k / g_dagger) = (a_dagger - a_k) + (b_k - b_dagger) on usable bins.
Eigen::ArrayXd log_ratio(const LogRdf& g_k, const LogRdf& target, const std::vector<bool>& usable) {
  Eigen::ArrayXd d = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(usable.size()));
  for (std::size_t i = 0; i < usable.size(); ++i) {
    if (!usable[i]) continue;
    d[i] = (target.exponent[i] - g_k.exponent[i]) + (g_k.log_y[i] - target.log_y[i]);
    if (!std::isfinite(d[i])) {
      throw DomainError(fmt::format("RDF ratio is not positive and finite at r = {:.6g}", g_k.exponent.r(i)));
    }
  }
  return d;
}

}  // namespace

RadialFunction pmf_initial_guess(const LogRdf& target, double beta, const LJTypeParams& params) {
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  Eigen::ArrayXd u = -target.log_g() / beta;
  fill_gaps(u, *target.grid(), target.mask, params.alpha);
  RadialFunction out(target.grid(), std::move(u), params.alpha);
  const auto cert = certify_table(out, params);
  if (!cert.pass) throw DomainError("potential of mean force is not of Lennard-Jones type: " + cert.message);
  return out;
}

RadialFunction ibi_step(const RadialFunction& u_k, const LogRdf& g_k, const LogRdf& target, double gamma,
                        double alpha) {
  if (!u_k.compatible(target.exponent)) throw InputError("potential and target RDF live on different grids");
  const std::vector<bool> usable = both(g_k, target);
  const Eigen::ArrayXd d = log_ratio(g_k, target, usable);
  Eigen::ArrayXd u = u_k.values;
  for (std::size_t i = 0; i < usable.size(); ++i)
    if (usable[i]) u[i] += gamma * d[i];
  const Eigen::Index b = first_usable(usable);
  if (b < 0) throw InputError("no bin is usable in both model and target RDF");
  for (Eigen::Index i = 0; i < b; ++i) u[i] = u[b] * std::pow((*u_k.grid)[b] / (*u_k.grid)[i], alpha);
  return u_k.with_values(std::move(u));
}

double ibi_residual(const LogRdf& g_k, const LogRdf& target, double alpha) {
  const std::vector<bool> usable = both(g_k, target);
  return norm_linf_rho(RadialFunction(target.grid(), log_ratio(g_k, target, usable), alpha), alpha);
}

LogRdf forward_log_rdf(const RadialFunction& u, const IBIConfig& cfg, const LJTypeParams& params) {
  if (cfg.backend == ForwardBackend::expansion) {
    return LogRdf::from_forward(rdf_expansion(u, cfg.beta, cfg.z, cfg.N_max), u, cfg.beta);
  }
  GCMCConfig g = cfg.gcmc;
  g.beta = cfg.beta;
  g.z = cfg.z;
  if (!histogram_grid(g)->same_nodes(*u.grid)) {
    throw InputError("GCMC backend needs the potential tabulated on the histogram bin centres");
  }
  const GCMCResult res = run_gcmc(Potential::tabulated(u, params), g);
  return LogRdf::from_g(res.g, cfg.floor, res.missing);
}

IBITrace run_ibi(const RadialFunction& u0, const LogRdf& target, const IBIConfig& cfg, const LJTypeParams& params,
                 const std::optional<RadialFunction>& u_true) {
  const double gamma = cfg.resolved_gamma();
  if (!(gamma >= 0.0)) throw InputError("relaxation parameter must be non-negative");
  if (!(cfg.residual_tol > 0.0)) throw InputError("residual tolerance must be positive");
  IBITrace trace;
  const auto cert0 = certify_table(u0, params);
  if (!cert0.pass) {
    trace.certified = false;
    trace.failure = cert0;
    trace.stop_reason = "initial potential is not of Lennard-Jones type";
    return trace;
  }
  RadialFunction u = u0;
  for (int k = 0;; ++k) {
    LogRdf model;
    try {
      model = forward_log_rdf(u, cfg, params);
    } catch (const DomainError& e) {
      trace.stop_reason = fmt::format("forward model failed at iteration {}: {}", k, e.what());
      break;
    }
    trace.iterates.push_back(u);
    trace.residuals.push_back(ibi_residual(model, target, params.alpha));
    trace.certified_each.push_back(true);
    if (u_true) trace.errors.push_back(norm_vu(u - *u_true, *u_true, params.r0, params.alpha));
    if (trace.residuals.back() <= cfg.residual_tol) {
      trace.converged = true;
      trace.stop_reason = "residual tolerance reached";
      break;
    }
    if (k >= cfg.max_iters) {
      trace.stop_reason = "iteration limit reached";
      break;
    }
    RadialFunction next = ibi_step(u, model, target, gamma, params.alpha);
    const auto cert = certify_table(next, params);
    if (!cert.pass) {
      trace.certified = false;
      trace.failure = cert;
      trace.stop_reason = fmt::format("iterate {} is not of Lennard-Jones type: {}", k + 1, cert.message);
      break;
    }
    u = std::move(next);
  }
  return trace;
}

RadialFunction phi_derivative(const RadialFunction& u, const RadialFunction& v, double beta, double z, double gamma,
                              int N_max) {
  if (!u.compatible(v)) throw InputError("perturbation and potential live on different grids");
  const double a = 1.0 - gamma * beta;
  if (N_max == 2) return v.with_values(a * v.values);
  const CavityBase base = prepare_cavity(u, beta, z);
  const RadialFunction dy = cavity_derivative(base, v);
  return RadialFunction(u.grid, a * v.values + gamma * dy.values / base.y, std::min(v.tail_exponent, dy.tail_exponent));
}

namespace {

RadialFunction phi_difference(const CavityBase& base, const RadialFunction& v, double gamma) {
  const double a = 1.0 - gamma * base.beta;
  const RadialFunction dy = cavity_difference(base, v);
  Eigen::ArrayXd d(v.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = a * v[i] + gamma * std::log1p(dy[i] / base.y[i]);
  return RadialFunction(v.grid, std::move(d), std::min(v.tail_exponent, dy.tail_exponent));
}

RadialFunction phi_derivative(const CavityBase& base, const RadialFunction& v, double gamma) {
  const RadialFunction dy = cavity_derivative(base, v);
  return RadialFunction(v.grid, (1.0 - gamma * base.beta) * v.values + gamma * dy.values / base.y,
                        std::min(v.tail_exponent, dy.tail_exponent));
}

}  // namespace

RadialFunction phi_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z, double gamma,
                              int N_max) {
  if (!u.compatible(v)) throw InputError("perturbation and potential live on different grids");
  if (N_max == 2) {
    // y = 1 for every potential, so Phi(u + v) - Phi(u) = (1 - gamma beta) v.
    return v.with_values((1.0 - gamma * beta) * v.values);
  }
  if (N_max != 3) throw InputError(fmt::format("expansion order N_max must be 2 or 3, got {}", N_max));
  return phi_difference(prepare_cavity(u, beta, z), v, gamma);
}

RadialFunction random_direction(const RadialFunction& u, double r0, double alpha, double norm, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp(-1.0, 1.0), freq(0.5, 3.0), phase(0.0, 2.0 * std::numbers::pi),
      decay(2.0, 8.0);
  double a[3], w[3], p[3];
  for (int k = 0; k < 3; ++k) {
    a[k] = amp(rng);
    w[k] = freq(rng);
    p[k] = phase(rng);
  }
  const double lambda = decay(rng);
  auto v = RadialFunction::from(
      u.grid,
      [&](double r) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += a[k] * std::sin(w[k] * r + p[k]);
        return s * std::exp(-r / lambda) / rho_weight(r, alpha);
      },
      alpha);
  const double n = norm_vu(v, u, r0, alpha);
  if (!(n > 0.0)) throw DomainError("random direction vanished");
  return (norm / n) * v;
}

ProbeReport lipschitz_probe(const RadialFunction& u, double r0, double alpha, double beta, double z, double gamma,
                            double magnitude, const ProbeOptions& opt) {
  if (opt.N_max != 3) throw InputError("the Lipschitz probe uses the N_max = 3 expansion");
  if (!(magnitude > 0.0) || opt.n_samples < 1 || opt.halvings < 1) throw InputError("invalid probe settings");
  const CavityBase base = prepare_cavity(u, beta, z);
  ProbeReport rep;
  for (int l = 0; l <= opt.halvings; ++l) rep.levels.push_back({magnitude * std::ldexp(1.0, -l)});
  for (int s = 0; s < opt.n_samples; ++s) {
    const RadialFunction v = random_direction(u, r0, alpha, magnitude, opt.seed + static_cast<std::uint64_t>(s));
    const RadialFunction dv = phi_derivative(base, v, gamma);
    for (auto& L : rep.levels) {
      const double h = L.magnitude / magnitude;
      const RadialFunction hv = h * v;
      const RadialFunction d = phi_difference(base, hv, gamma);
      const RadialFunction rem = d.with_values(d.values - h * dv.values);
      const double nv = norm_vu(hv, u, r0, alpha);
      const double dn = norm_vu(d, u, r0, alpha), rn = norm_vu(rem, u, r0, alpha);
      const double dr = norm_linf_rho(d, alpha), rr = norm_linf_rho(rem, alpha);
      L.diff_norm = std::max(L.diff_norm, dn);
      L.rem_norm = std::max(L.rem_norm, rn);
      L.diff_norm_rho = std::max(L.diff_norm_rho, dr);
      L.rem_norm_rho = std::max(L.rem_norm_rho, rr);
      L.diff_ratio = std::max(L.diff_ratio, dn / nv);
      L.rem_ratio = std::max(L.rem_ratio, rn / (nv * nv));
      L.diff_ratio_rho = std::max(L.diff_ratio_rho, dr / nv);
      L.rem_ratio_rho = std::max(L.rem_ratio_rho, rr / (nv * nv));
    }
  }
  const auto& a = rep.levels.front();
  const auto& b = rep.levels.back();
  const double lm = std::log(a.magnitude / b.magnitude);
  rep.diff_slope = std::log(a.diff_norm / b.diff_norm) / lm;
  rep.rem_slope = std::log(a.rem_norm / b.rem_norm) / lm;
  rep.diff_slope_rho = std::log(a.diff_norm_rho / b.diff_norm_rho) / lm;
  rep.rem_slope_rho = std::log(a.rem_norm_rho / b.rem_norm_rho) / lm;
  return rep;
}

}  // namespace boltzinv
