#pragma once

#include <optional>
#include <string>
#include <vector>

#include "boltzinv/forward.hpp"
#include "boltzinv/gcmc.hpp"

namespace boltzinv {

/// log g split as -exponent + log_y, so that g never has to be formed where
/// it underflows. Bins with mask = false carry no usable data.
struct LogRdf {
  RadialFunction exponent;  ///< beta u for model output, -log g for plain data
  RadialFunction log_y;     ///< log of the cavity function, 0 for plain data
  std::vector<bool> mask;

  Eigen::ArrayXd log_g() const { return log_y.values - exponent.values; }
  GridPtr grid() const { return exponent.grid; }

  /// Plain g data: bins with g below `floor` (or missing) are masked out.
  static LogRdf from_g(const RadialFunction& g, double floor = 1e-8, const std::vector<bool>& missing = {});
  /// Expansion output for potential u: exponent beta u, exact log y.
  static LogRdf from_forward(const ForwardResult& r, const RadialFunction& u, double beta);
};

/// u0 = -(1/beta) log g on usable bins. Leading core bins without data are
/// continued by u(r_b) (r_b / r)^alpha from the first usable bin r_b; other
/// unusable bins are interpolated linearly. The result is certified with
/// `params`; DomainError carries the report on failure.
RadialFunction pmf_initial_guess(const LogRdf& target, double beta, const LJTypeParams& params);

/// u_k + gamma log(g_k / g_dagger) on bins where both are usable; leading
/// core bins without data take the power continuation, others keep u_k.
RadialFunction ibi_step(const RadialFunction& u_k, const LogRdf& g_k, const LogRdf& target, double gamma,
                        double alpha);

/// sup rho |log(g_k / g_dagger)| over bins usable in both.
double ibi_residual(const LogRdf& g_k, const LogRdf& target, double alpha);

enum class ForwardBackend { expansion, gcmc };

struct IBIConfig {
  std::optional<double> gamma;  ///< unset selects 1 / beta
  int max_iters = 20;
  double residual_tol = 1e-10;
  ForwardBackend backend = ForwardBackend::expansion;
  double beta = 1.0;
  double z = 0.0;
  int N_max = 3;
  GCMCConfig gcmc;  ///< used by the GCMC backend (beta and z overridden)
  double floor = 1e-8;

  double resolved_gamma() const { return gamma.value_or(1.0 / beta); }
};

struct IBITrace {
  std::vector<RadialFunction> iterates;
  std::vector<double> residuals;
  std::vector<double> errors;  ///< |u_k - u_true|_V, when u_true is given
  std::vector<bool> certified_each;
  bool certified = true;
  bool converged = false;
  std::string stop_reason;
  CertificationReport failure;  ///< report of the first uncertified iterate
};

/// Forward model output for iterate u in log form.
LogRdf forward_log_rdf(const RadialFunction& u, const IBIConfig& cfg, const LJTypeParams& params);

/// Iterates until residual <= tol, max_iters, a certification failure, or a
/// forward-model failure. Every new iterate is certified against `params`.
IBITrace run_ibi(const RadialFunction& u0, const LogRdf& target, const IBIConfig& cfg, const LJTypeParams& params,
                 const std::optional<RadialFunction>& u_true = std::nullopt);

/// Phi'(u) v = v + gamma F'(u)v / F(u) = (1 - gamma beta) v + gamma (dy v) / y.
RadialFunction phi_derivative(const RadialFunction& u, const RadialFunction& v, double beta, double z, double gamma,
                              int N_max = 3);
/// Phi(u + v) - Phi(u) = (1 - gamma beta) v + gamma log1p((y[u+v] - y[u]) / y[u]).
RadialFunction phi_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z, double gamma,
                              int N_max = 3);

struct ProbeLevel {
  double magnitude = 0.0;
  double diff_ratio = 0.0;      ///< max |dPhi|_V / |v|_V
  double rem_ratio = 0.0;       ///< max |dPhi - Phi'v|_V / |v|_V^2
  double diff_ratio_rho = 0.0;  ///< max |dPhi|_rho / |v|_V
  double rem_ratio_rho = 0.0;   ///< max |dPhi - Phi'v|_rho / |v|_V^2
  double diff_norm = 0.0;       ///< max |dPhi|_V
  double rem_norm = 0.0;        ///< max |dPhi - Phi'v|_V
  double diff_norm_rho = 0.0;
  double rem_norm_rho = 0.0;
};

struct ProbeReport {
  std::vector<ProbeLevel> levels;  ///< magnitude, magnitude/2, ...
  double diff_slope = 0.0;         ///< log-log slope of diff_norm in magnitude
  double rem_slope = 0.0;
  double diff_slope_rho = 0.0;
  double rem_slope_rho = 0.0;
};

struct ProbeOptions {
  int n_samples = 8;
  int halvings = 2;
  std::uint64_t seed = 7;
  int N_max = 3;
};

/// Random smooth direction with |v|_V = norm.
RadialFunction random_direction(const RadialFunction& u, double r0, double alpha, double norm, std::uint64_t seed);

/// Samples random v with |v|_V = magnitude and measures the Lipschitz and
/// remainder ratios of Phi at magnitude, magnitude/2, ...
ProbeReport lipschitz_probe(const RadialFunction& u, double r0, double alpha, double beta, double z, double gamma,
                            double magnitude, const ProbeOptions& opt = {});

}  // namespace boltzinv
