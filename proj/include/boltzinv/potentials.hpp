#pragma once

#include <Eigen/Core>
#include <cmath>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "boltzinv/radial_function.hpp"

namespace boltzinv {

/// Class constants of the admissible family: |u| <= C r^-alpha beyond r0 and
/// u >= c r^-alpha inside r0, with c0 < c < C < C0.
struct LJTypeParams {
  double alpha = 6.0;
  double r0 = 1.0;
  double c0 = 0.1;
  double C0 = 100.0;
  double c = std::numeric_limits<double>::quiet_NaN();
  double C = std::numeric_limits<double>::quiet_NaN();

  void validate() const;
};

/// 4 eps ((sigma/r)^12 - (sigma/r)^6).
template <typename Scalar>
Scalar lennard_jones(Scalar r, Scalar epsilon, Scalar sigma) {
  const Scalar s6 = std::pow(sigma / r, Scalar(6));
  return Scalar(4) * epsilon * (s6 * s6 - s6);
}

struct LennardJones {
  double epsilon = 1.0;
  double sigma = 1.0;
};

/// amplitude * r^-exponent.
struct PowerLaw {
  double amplitude = 1.0;
  double exponent = 6.0;
};

struct ZeroPotential {};

/// Tabulated values; below the first node the potential continues as
/// u_first (r_first / r)^alpha, beyond r_max with the table's tail exponent.
struct TabulatedPotential {
  RadialFunction table;
};

class Potential {
 public:
  using Form = std::variant<LennardJones, PowerLaw, ZeroPotential, TabulatedPotential>;

  Potential(Form form, LJTypeParams params);

  static Potential lj(double epsilon, double sigma, LJTypeParams params);
  static Potential power_law(double amplitude, double exponent, LJTypeParams params);
  static Potential zero(LJTypeParams params);
  static Potential tabulated(RadialFunction table, LJTypeParams params);

  /// u(r); +infinity at r = 0 for forms with a repulsive core.
  double operator()(double r) const;
  RadialFunction sample(GridPtr grid) const;

  const Form& form() const { return form_; }
  const LJTypeParams& params() const { return params_; }
  double tail_exponent() const;
  std::string describe() const;

 private:
  Form form_;
  LJTypeParams params_;
};

struct CertificationReport {
  bool pass = false;
  bool core_pass = false;
  bool tail_pass = false;
  double c = 0.0;  ///< inf_{r <= r0} u r^alpha
  double C = 0.0;  ///< sup_{r >= r0} |u| r^alpha
  double r_core_worst = 0.0;
  double r_tail_worst = 0.0;
  std::string message;
};

CertificationReport certify_lj_type(const Potential& u, const LJTypeParams& p, const RadialGrid& grid);

/// N particles in a cube [-L, L]^3 with L = box_half_width.
struct Configuration {
  Eigen::Matrix3Xd coordinates;
  double box_half_width = 1.0;

  Eigen::Index size() const { return coordinates.cols(); }
  bool valid() const;
};

/// Sum of pair energies; +infinity when two particles coincide.
double total_energy(const Potential& u, const Configuration& cfg);

/// f(r) = exp(-beta u(r)) - 1 on the grid; the tail exponent is that of u.
RadialFunction mayer_function(const Potential& u, double beta, GridPtr grid);
/// e^{-beta u} at the nodes of u (exact zeros where it underflows).
Eigen::ArrayXd boltzmann_factor(const RadialFunction& u, double beta);

RadialFunction mayer_function(const RadialFunction& u, double beta);

struct MayerBound {
  double c_beta = 0.0;
  double l1 = 0.0;          ///< 4 pi int r^2 |f| including the analytic tail
  bool degenerate = false;  ///< f vanishes identically
};

/// c_beta = 1.01 * int |f|; strictly above the integral unless f = 0.
MayerBound c_beta_bound(const RadialFunction& f);

struct EnsembleParams {
  double beta = 1.0;
  double z = 0.0;
  double c_beta = 0.0;
  double B = 0.0;
  double z_max_gas = 0.0;
  double z_max_strict = 0.0;

  bool in_gas_phase() const { return z > 0.0 && z < z_max_gas; }
};

struct GasPhaseBounds {
  double z_max_gas;
  double z_max_strict;
};

GasPhaseBounds gas_phase_bounds(double c_beta, double B, double beta);
EnsembleParams make_ensemble(double beta, double z, double c_beta, double B);

/// C_beta = 1.01 max(beta e^{2 beta B}, rho(r0) / (e (1 - delta) c_beta)).
double perturbation_weight_constant(double beta, double B, double c_beta, double r0, double alpha,
                                    double delta);

/// q(delta) = int |f| / c_beta + C_beta delta c_rho.
double q_of_delta(double f_l1, double c_beta, double C_beta, double delta, double c_rho);

struct PerturbationRadiusOptions {
  /// Fraction of the gap 1 - q(0) that the perturbation term may use;
  /// 1 reproduces the bare requirement q < 1.
  double slack_fraction = 0.5;
  double rel_tol = 1e-3;
};

struct PerturbationRadius {
  double delta0 = 0.0;
  double C_beta = 0.0;
  double q = 0.0;
  double q0 = 0.0;
  std::vector<std::pair<double, double>> q_curve;  ///< (delta, q) probes
};

/// Largest delta in (0, 1) such that u +- delta m stays in the admissible
/// class for the extreme perturbations m (|u| in the core, 1/rho beyond r0)
/// and q(delta) respects the slack. Throws DomainError with the q curve if
/// no such delta exists.
PerturbationRadius perturbation_radius(const RadialFunction& u, const LJTypeParams& p, double beta,
                                       double c_beta, double f_l1, double B,
                                       const PerturbationRadiusOptions& opt = {});

}  // namespace boltzinv
