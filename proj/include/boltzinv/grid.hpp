#pragma once

#include <Eigen/Core>
#include <memory>

namespace boltzinv {

/// Strictly increasing, strictly positive radial nodes covering (0, r_max].
///
/// Quadrature conventions used everywhere in the library: a function is
/// represented by its node values, held constant on [0, r_first], and
/// interpolated linearly between nodes. Radial integrands r^k x(r) are
/// integrated with the trapezoid rule on the nodes.
class RadialGrid {
 public:
  explicit RadialGrid(Eigen::ArrayXd nodes);

  /// Geometric spacing with ratio `core_ratio` from `core_start * r0` up to r0,
  /// then uniform spacing `dr_fraction * r0` up to `r_max`.
  static RadialGrid hybrid(double r0, double r_max, double core_ratio = 1.02,
                           double dr_fraction = 0.01, double core_start = 1e-3);
  /// Nodes h, 2h, ..., up to and including r_max (rounded to a whole step).
  static RadialGrid uniform(double h, double r_max);

  /// Inserts the midpoint of every panel, roughly doubling the resolution.
  RadialGrid refined() const;

  Eigen::Index size() const { return nodes_.size(); }
  double operator[](Eigen::Index i) const { return nodes_[i]; }
  const Eigen::ArrayXd& nodes() const { return nodes_; }
  double r_min() const { return nodes_[0]; }
  double r_max() const { return nodes_[nodes_.size() - 1]; }

  /// Weights W with sum_j W_j x_j = 4 pi int_0^{r_max} r^2 x(r) dr.
  const Eigen::ArrayXd& volume_weights() const { return volume_weights_; }
  /// Weights with sum_j w_j y_j = int_0^{r_max} y(r) dr for y(0) = 0.
  const Eigen::ArrayXd& line_weights() const { return line_weights_; }

  /// Largest index i with nodes[i] <= r, or -1 when r < r_min.
  Eigen::Index locate(double r) const;

  bool same_nodes(const RadialGrid& other) const;

 private:
  Eigen::ArrayXd nodes_;
  Eigen::ArrayXd volume_weights_;
  Eigen::ArrayXd line_weights_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(RadialGrid g) { return std::make_shared<const RadialGrid>(std::move(g)); }

}  // namespace boltzinv
