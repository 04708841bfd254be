#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "boltzinv/graphs.hpp"
#include "boltzinv/report.hpp"
#include "boltzinv/setup.hpp"

namespace boltzinv {

/// Truncated activity expansion omega = sum_{N=2}^{N_max} a_N z^N.
struct ClusterExpansion {
  int N_max = 3;
  double z = 0.0;
  std::map<int, RadialFunction> coeffs;
  RadialFunction omega;
};

/// a_3 = 2 f I1 + (f * f)(1 + f) with I1 = int f.
RadialFunction a3_analytic(const RadialFunction& f);

struct McEstimate {
  double r = 0.0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::uint64_t samples = 0;
};

struct McOptions {
  std::uint64_t budget = 200000;  ///< samples per radius, split across chains
  int chains = 8;
  std::uint64_t seed = 2024;
};

/// Monte Carlo estimate of int sum_{C connected} prod f(R_i - R_j) dR_3..dR_N
/// with R_1 = (r, 0, 0), R_2 = 0. With `absolute` the modulus of the graph sum
/// is integrated instead. Vertices 3..N are drawn from |f|-shaped proposals
/// anchored at earlier vertices; chains are merged by inverse-variance weights.
std::vector<McEstimate> connected_integral_mc(int N, const RadialFunction& f, const std::vector<double>& radii,
                                              const McOptions& opt, bool absolute = false);

/// a_N(r) for N in {3, 4} by Monte Carlo (the graph integral over (N-2)!).
std::vector<McEstimate> aN_monte_carlo(int N, const RadialFunction& f, const std::vector<double>& radii,
                                       const McOptions& opt);

/// a_4 on the grid of f: Monte Carlo at coarse radii, linear in between,
/// power tail beyond the last sample. Results are cached per (f, options).
RadialFunction a4_profile(const RadialFunction& f, const McOptions& opt = {});

struct ExpansionOptions {
  bool force = false;  ///< allow z outside the gas-phase window
  McOptions a4;
};

ClusterExpansion ursell_truncated(const ModelSetup& s, double z, int N_max, const ExpansionOptions& opt = {});

/// Same expansion for an arbitrary sampled potential u at inverse temperature beta.
ClusterExpansion ursell_truncated(const RadialFunction& u, double beta, double z, int N_max,
                                  const McOptions& a4 = {});

/// Tree-graph bound int |phi_N| <= e^{N beta B} N^{N-2} c_beta^{N-1} W_sigma(R)
/// at each radius, passing when lhs <= rhs + 3 standard errors.
std::vector<InequalityReport> check_tree_graph_bound(const ModelSetup& s, const RadialFunction& W_sigma, int N,
                                                     const std::vector<double>& radii, const McOptions& opt = {});

struct UrsellDecayReport {
  double c_omega = 0.0;  ///< sup rho |omega|
  InequalityReport finite;
  InequalityReport envelope;  ///< max_r |omega| / envelope(r) <= 1
  InequalityReport tail;      ///< |rho omega / (z^2 rho f) - 1| <= 0.1 for r > 10 sigma
  bool pass = false;
};

UrsellDecayReport check_ursell_decay(const ClusterExpansion& e, const ModelSetup& s, const RadialFunction& W_sigma,
                                     double tail_from = 10.0);

/// omega[u + v] - omega[u] for N_max in {2, 3}, assembled from
/// f[u + v] - f[u] = (1 + f) expm1(-beta v) and the bilinear expansion of
/// f * f, so small differences do not cancel against large values.
RadialFunction ursell_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z, int N_max);

/// Directional derivative of omega in direction v, N_max in {2, 3}.
/// Throws PreconditionError if |v|_V > delta0 / 2.
RadialFunction ursell_derivative(const ModelSetup& s, const RadialFunction& v, double z, int N_max);

/// Unchecked version for an arbitrary base potential.
RadialFunction ursell_derivative(const RadialFunction& u, const RadialFunction& v, double beta, double z, int N_max);

}  // namespace boltzinv
