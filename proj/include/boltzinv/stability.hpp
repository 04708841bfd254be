#pragma once

#include <cstdint>

#include "boltzinv/potentials.hpp"

namespace boltzinv {

struct StabilitySearchConfig {
  int max_particles = 256;
  /// Maximum number of configurations evaluated; candidates are generated in a
  /// fixed order, so a larger budget only ever adds configurations.
  int budget = 100000;
  int random_configurations = 200;
  std::uint64_t seed = 12345;
};

struct StabilityEstimate {
  double B_hat = 0.0;
  Configuration best;
  int evaluated = 0;
  std::string best_kind;
};

/// Lower estimate of the stability constant: max(0, sup -U_N / N) over pair,
/// fcc cluster, random and collapsed configurations.
StabilityEstimate estimate_stability_constant(const Potential& u, const StabilitySearchConfig& cfg = {});

}  // namespace boltzinv
