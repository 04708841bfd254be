#include "boltzinv/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "boltzinv/errors.hpp"

namespace boltzinv {

RadialGrid::RadialGrid(Eigen::ArrayXd nodes) : nodes_(std::move(nodes)) {
  const Eigen::Index n = nodes_.size();
  if (n < 2) throw InputError("radial grid needs at least two nodes");
  if (!(nodes_[0] > 0.0)) throw InputError("radial grid nodes must be positive");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(nodes_[i] > nodes_[i - 1]))
      throw InputError("radial grid nodes must be strictly increasing (node " + std::to_string(i) + ")");
  }
  if (!nodes_.allFinite()) throw InputError("radial grid nodes must be finite");

  line_weights_ = Eigen::ArrayXd::Zero(n);
  volume_weights_ = Eigen::ArrayXd::Zero(n);
  const double r_first = nodes_[0];
  line_weights_[0] = 0.5 * r_first;
  volume_weights_[0] = r_first * r_first * r_first / 3.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double h = nodes_[i + 1] - nodes_[i];
    line_weights_[i] += 0.5 * h;
    line_weights_[i + 1] += 0.5 * h;
    volume_weights_[i] += 0.5 * h * nodes_[i] * nodes_[i];
    volume_weights_[i + 1] += 0.5 * h * nodes_[i + 1] * nodes_[i + 1];
  }
  volume_weights_ *= 4.0 * std::numbers::pi;
}

RadialGrid RadialGrid::hybrid(double r0, double r_max, double core_ratio, double dr_fraction,
                              double core_start) {
  if (!(r0 > 0.0) || !(r_max > r0)) throw InputError("hybrid grid needs 0 < r0 < r_max");
  if (!(core_ratio > 1.0) || core_ratio > 1.05)
    throw InputError("hybrid grid core ratio must lie in (1, 1.05]");
  if (!(dr_fraction > 0.0) || dr_fraction > 0.02)
    throw InputError("hybrid grid spacing must lie in (0, 0.02] r0");
  if (!(core_start > 0.0) || core_start > 1e-3)
    throw InputError("hybrid grid must start at or below 1e-3 r0");

  std::vector<double> r;
  // Geometric core, laid out backwards from r0 so that r0 is a node.
  const double lo = core_start * r0;
  const auto n_core = static_cast<int>(std::ceil(std::log(r0 / lo) / std::log(core_ratio)));
  const double ratio = std::exp(std::log(r0 / lo) / n_core);
  for (int k = n_core; k >= 1; --k) r.push_back(r0 / std::pow(ratio, k));
  r.push_back(r0);
  const double dr = dr_fraction * r0;
  const auto n_outer = static_cast<int>(std::ceil((r_max - r0) / dr - 1e-9));
  const double step = (r_max - r0) / n_outer;
  for (int k = 1; k <= n_outer; ++k) r.push_back(r0 + k * step);
  r.back() = r_max;
  return RadialGrid(Eigen::Map<Eigen::ArrayXd>(r.data(), static_cast<Eigen::Index>(r.size())));
}

RadialGrid RadialGrid::uniform(double h, double r_max) {
  if (!(h > 0.0) || !(r_max > h)) throw InputError("uniform grid needs 0 < h < r_max");
  const auto n = static_cast<Eigen::Index>(std::llround(r_max / h));
  Eigen::ArrayXd r(n);
  for (Eigen::Index i = 0; i < n; ++i) r[i] = h * static_cast<double>(i + 1);
  return RadialGrid(std::move(r));
}

RadialGrid RadialGrid::refined() const {
  const Eigen::Index n = size();
  Eigen::ArrayXd r(2 * n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    r[2 * i] = nodes_[i];
    if (i + 1 < n) r[2 * i + 1] = 0.5 * (nodes_[i] + nodes_[i + 1]);
  }
  return RadialGrid(std::move(r));
}

Eigen::Index RadialGrid::locate(double r) const {
  const double* begin = nodes_.data();
  const double* end = begin + nodes_.size();
  return static_cast<Eigen::Index>(std::upper_bound(begin, end, r) - begin) - 1;
}

bool RadialGrid::same_nodes(const RadialGrid& other) const {
  return this == &other || (size() == other.size() && (nodes_ == other.nodes_).all());
}

}  // namespace boltzinv
