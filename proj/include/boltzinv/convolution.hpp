#pragma once

#include <Eigen/Core>
#include <limits>
#include <memory>
#include <vector>

#include "boltzinv/radial_function.hpp"
#include "boltzinv/report.hpp"

namespace boltzinv {

/// Radial profile of the 3D convolution of two radial functions,
///   (w * x)(r) = (2 pi / r) int_0^inf s w(s) int_{|r-s|}^{r+s} t x(t) dt ds,
/// evaluated on the grid of `w` (x is regridded if needed). Inner integrals are
/// exact for the piecewise-linear t x(t); the outer one is trapezoidal on the
/// nodes plus a geometric quadrature over the power tail of w.
RadialFunction radial_convolve(const RadialFunction& w, const RadialFunction& x);

/// (w * x)(0) = 4 pi int s^2 w(s) x(s) ds.
double convolve_at_origin(const RadialFunction& w, const RadialFunction& x);

/// The linear map x -> w * x as a dense matrix on w's grid, for inputs whose
/// tail exponent is `input_tail`.
class ConvolutionOperator {
 public:
  ConvolutionOperator(const RadialFunction& w, double input_tail);

  RadialFunction apply(const RadialFunction& x) const;
  const Eigen::MatrixXd& matrix() const { return K_; }
  const GridPtr& grid() const { return grid_; }
  double output_tail() const { return output_tail_; }

 private:
  GridPtr grid_;
  double input_tail_;
  double output_tail_;
  Eigen::MatrixXd K_;
};

struct AutoconvolutionLadder {
  RadialFunction w;
  std::vector<RadialFunction> W;  ///< W[0] = w, W[k] = w * W[k-1]
  double alpha = 6.0;
  double q = 0.0;
  double q_bar = 0.0;
  std::vector<double> l1_norms;
  std::vector<double> rho_norms;
  std::shared_ptr<const ConvolutionOperator> op;

  /// Appends W_{n+1} = w * W_n.
  void extend();
};

/// Ladder W_1..W_{n_max}. q_bar <= 0 selects (1 + q) / 2.
/// Throws PreconditionError unless q = |w|_L1 < 1 and q < q_bar < 1.
AutoconvolutionLadder build_ladder(const RadialFunction& w, int n_max, double alpha, double q_bar = 0.0);

struct SeriesResult {
  RadialFunction W_sigma;
  int terms = 0;
  bool converged = false;
  /// Geometric-envelope bound on sup rho |sum_{n > terms} W_n|.
  double remainder_bound = 0.0;
};

/// Partial sums of W_n until |W_n|_{L_rho} < tol (1 - q_bar), extending the
/// ladder as needed up to max_terms.
SeriesResult series_W_sigma(AutoconvolutionLadder& ladder, double tol, int max_terms = 100000);

/// W_sigma = (I - K)^{-1} w, the closed form of the same series.
RadialFunction resolvent_W_sigma(const RadialFunction& w);

InequalityReport check_banach_algebra(const RadialFunction& w, const RadialFunction& w2, double alpha);

struct GeometricDecayReport {
  double epsilon = 0.0;
  double C_star = 0.0;
  bool pass = false;
  std::vector<InequalityReport> levels;  ///< envelope with the (1 - (q/q_bar)^n) factor
  std::vector<InequalityReport> coarse;  ///< C* q_bar^n envelope
};

/// epsilon = 1 - (q / q_bar)^(1/alpha).
double decay_epsilon(double q, double q_bar, double alpha);

GeometricDecayReport check_geometric_decay(const AutoconvolutionLadder& ladder);

}  // namespace boltzinv
