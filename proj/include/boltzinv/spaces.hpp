#pragma once

#include <cmath>

#include "boltzinv/radial_function.hpp"

namespace boltzinv {

/// rho(r) = (1 + r^2)^(alpha/2).
template <typename Scalar>
Scalar rho_weight(Scalar r, Scalar alpha) {
  using std::pow;
  return pow(Scalar(1) + r * r, alpha / Scalar(2));
}

/// Elementwise rho over an array of radii.
inline Eigen::ArrayXd rho_weight(const Eigen::ArrayXd& r, double alpha) {
  return (1.0 + r.square()).pow(0.5 * alpha);
}

/// sup_r rho(r) |w(r)| over nodes and panel midpoints. Infinite when the tail
/// of w decays slower than r^-alpha.
double norm_linf_rho(const RadialFunction& w, double alpha);

/// Perturbation norm: max of sup_{r <= r0} |v/u| and sup_{r >= r0} rho |v|.
/// Throws PreconditionError if u vanishes at a core node.
double norm_vu(const RadialFunction& v, const RadialFunction& u, double r0, double alpha);

/// Only the tail branch sup_{r >= r0} rho |v| of norm_vu.
double norm_vu_tail(const RadialFunction& v, double r0, double alpha);

/// c_rho = 4 pi int_0^inf r^2 (1 + r^2)^(-alpha/2) dr by adaptive quadrature.
double embedding_constant_c_rho(double alpha);

}  // namespace boltzinv
