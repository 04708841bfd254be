#pragma once

#include <string>
#include <vector>

#include "boltzinv/report.hpp"
#include "boltzinv/setup.hpp"

namespace boltzinv {

/// Activity-expansion coefficients of the density: rho0 = z + I1 z^2 + d3 z^3.
struct DensityCoefficients {
  double I1 = 0.0;
  double d3 = 0.0;  ///< (3/2) I1^2 + (1/2) int f (f * f)
};

DensityCoefficients density_coefficients(const RadialFunction& f);

/// rho0 truncated after the z^order term, order in {1, 2, 3}.
double density_rho0(const DensityCoefficients& c, double z, int order);
double density_rho0(const RadialFunction& f, double z, int order);
/// Same, refusing activities outside the gas-phase window unless `force`.
double density_rho0(const ModelSetup& s, double z, int order, bool force = false);

/// Radial distribution function and its companions on one grid.
///
/// For the expansion backend g = e^{-beta u} y with log y carried exactly,
/// and h = g - 1 is computed from log g so that it keeps full relative
/// precision where g is close to one. GCMC results converted to this type
/// carry per-bin standard errors and a missing-bin mask.
struct ForwardResult {
  RadialFunction g;
  RadialFunction y;
  RadialFunction log_y;
  RadialFunction h;
  double rho0 = 0.0;
  std::string backend = "expansion";
  int order = 3;
  Eigen::ArrayXd g_stderr;  ///< empty for the expansion backend
  std::vector<bool> missing;
};

/// Expansion backend, N_max in {2, 3}. With N_max = 3:
/// y = 1 + z (f * f) / (1 + 2 z I1), g = e^{-beta u} y, rho0 = z + I1 z^2.
/// Throws DomainError if the truncated y is not positive somewhere.
ForwardResult rdf_expansion(const RadialFunction& u, double beta, double z, int N_max = 3);
ForwardResult rdf_expansion(const ModelSetup& s, double z, int N_max = 3, bool force = false);

/// g = 1 + (z^2 f + z^3 a3) / (z^2 + 2 z^3 I1), the same truncation written
/// through the Ursell coefficients. Used to cross-check rdf_expansion.
RadialFunction rdf_via_ursell(const RadialFunction& u, double beta, double z);

/// y >= (z^2/rho0^2)(1 - z e K / (1 - z K)), K = c_beta e^{2 beta B + 1},
/// at every grid node (or every non-missing bin). Throws PreconditionError
/// when z exceeds z_max_strict. For results with standard errors a bin
/// passes when y + 3 stderr(y) reaches the bound.
InequalityReport cavity_lower_bound_check(const ForwardResult& result, const EnsembleParams& ens);

/// Quantities of the N_max = 3 cavity function that depend only on the base
/// potential: y = 1 + z (f * f) / P with P = 1 + 2 z I1.
struct CavityBase {
  RadialFunction u;
  double beta = 1.0;
  double z = 0.0;
  RadialFunction f;
  Eigen::ArrayXd boltz;  ///< e^{-beta u}
  double I1 = 0.0;
  RadialFunction ff;
  double P = 1.0;
  Eigen::ArrayXd y;
};

/// Throws DomainError when P or y is not positive.
CavityBase prepare_cavity(const RadialFunction& u, double beta, double z);
RadialFunction cavity_difference(const CavityBase& base, const RadialFunction& v);
RadialFunction cavity_derivative(const CavityBase& base, const RadialFunction& v);

/// y[u + v] - y[u] for N_max in {2, 3}, without subtracting large numbers.
RadialFunction cavity_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z,
                                 int N_max = 3);
/// Directional derivative of y in direction v.
RadialFunction cavity_derivative(const RadialFunction& u, const RadialFunction& v, double beta, double z,
                                 int N_max = 3);

/// F[u + v] - F[u] = (1 + f)(expm1(-beta v) y[u + v] + y[u + v] - y[u]).
RadialFunction forward_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z,
                                  int N_max = 3);

/// F'(u) v = -beta e^{-beta u} v y + e^{-beta u} (dy) v.
RadialFunction frechet_F(const RadialFunction& u, const RadialFunction& v, double beta, double z, int N_max = 3);
/// Checked version: throws PreconditionError if |v|_V > delta0 / 2.
RadialFunction frechet_F(const ModelSetup& s, const RadialFunction& v, double z, int N_max = 3);

/// Throws PreconditionError unless |v|_V <= delta0 / 2 for the setup.
void require_small_perturbation(const ModelSetup& s, const RadialFunction& v);

}  // namespace boltzinv
