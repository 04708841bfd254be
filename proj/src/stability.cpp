#include "boltzinv/stability.hpp"

#include <algorithm>
#include <random>

namespace boltzinv {

namespace {

// Location of the pair minimum, scanned on (0, 10 r0].
double pair_minimum(const Potential& u) {
  const double r0 = u.params().r0;
  double best_r = r0;
  double best_u = u(r0);
  for (int i = 1; i <= 20000; ++i) {
    const double r = 10.0 * r0 * i / 20000.0;
    const double v = u(r);
    if (v < best_u) {
      best_u = v;
      best_r = r;
    }
  }
  return best_r;
}

// The n fcc sites with nearest-neighbour distance d closest to `centre`.
Eigen::Matrix3Xd fcc_cluster(int n, double d, const Eigen::Vector3d& centre_frac) {
  const double a = d * std::sqrt(2.0);
  const int cells = static_cast<int>(std::ceil(std::cbrt(n / 4.0))) + 2;
  static const double basis[4][3] = {{0, 0, 0}, {0.5, 0.5, 0}, {0.5, 0, 0.5}, {0, 0.5, 0.5}};
  std::vector<Eigen::Vector3d> sites;
  const Eigen::Vector3d centre = a * centre_frac;
  for (int i = -cells; i <= cells; ++i)
    for (int j = -cells; j <= cells; ++j)
      for (int k = -cells; k <= cells; ++k)
        for (const auto& b : basis) sites.emplace_back(a * Eigen::Vector3d(i + b[0], j + b[1], k + b[2]) - centre);
  std::stable_sort(sites.begin(), sites.end(),
                   [](const Eigen::Vector3d& x, const Eigen::Vector3d& y) { return x.squaredNorm() < y.squaredNorm(); });
  Eigen::Matrix3Xd out(3, n);
  for (int c = 0; c < n; ++c) out.col(c) = sites[c];
  return out;
}

Configuration enclose(Eigen::Matrix3Xd pts) {
  const double half = std::max(1.0, pts.array().abs().maxCoeff() * 1.0001);
  return {std::move(pts), half};
}

}  // namespace

StabilityEstimate estimate_stability_constant(const Potential& u, const StabilitySearchConfig& cfg) {
  StabilityEstimate est;
  est.best = Configuration{Eigen::Matrix3Xd::Zero(3, 1), 1.0};
  est.best_kind = "single particle";
  auto consider = [&](Configuration c, const char* kind) {
    if (est.evaluated >= cfg.budget) return;
    ++est.evaluated;
    const double e = total_energy(u, c);
    const double b = -e / static_cast<double>(c.size());
    if (b > est.B_hat) {
      est.B_hat = b;
      est.best = std::move(c);
      est.best_kind = kind;
    }
  };

  const double d0 = pair_minimum(u);
  {
    Eigen::Matrix3Xd pair = Eigen::Matrix3Xd::Zero(3, 2);
    pair(0, 1) = d0;
    consider(enclose(pair), "pair");
  }

  const std::vector<int> sizes = {4, 6, 13, 19, 38, 55, 79, 135, 201, 256};
  const std::vector<Eigen::Vector3d> centres = {
      {0, 0, 0}, {0.5, 0, 0}, {0.25, 0.25, 0.25}};
  for (int n : sizes) {
    if (n > cfg.max_particles) break;
    for (const auto& c : centres) {
      for (int s = 0; s <= 20; ++s) {
        const double d = d0 * (0.9 + 0.01 * s);
        consider(enclose(fcc_cluster(n, d, c)), "fcc cluster");
      }
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> count(2, cfg.max_particles);
  for (int k = 0; k < cfg.random_configurations; ++k) {
    const int n = count(rng);
    // Alternate between liquid-like density and a collapsed ball.
    const double side = (k % 2 == 0) ? d0 * std::cbrt(static_cast<double>(n)) * 0.5 : 0.3 * d0;
    Eigen::Matrix3Xd pts(3, n);
    for (int c = 0; c < n; ++c) pts.col(c) = side * Eigen::Vector3d(unit(rng), unit(rng), unit(rng));
    consider(enclose(pts), k % 2 == 0 ? "random" : "collapse");
  }
  return est;
}

}  // namespace boltzinv
