#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "boltzinv/forward.hpp"
#include "boltzinv/potentials.hpp"
#include "boltzinv/setup.hpp"

namespace boltzinv {

struct MoveMix {
  double insert = 0.25;
  double remove = 0.25;
  double displace = 0.5;
};

/// Grand canonical Monte Carlo settings. Move counts are per chain.
struct GCMCConfig {
  double box_side = 12.0;
  double beta = 1.0;
  double z = 0.0;
  MoveMix mix;
  double max_displacement = 0.5;
  double r_cut = 5.0;  ///< pair interactions vanish beyond r_cut (no shift)
  std::uint64_t n_equilibrate = 20000;
  std::uint64_t n_sample = 200000;
  std::uint64_t sample_interval = 10;  ///< moves between samples
  int blocks_per_chain = 8;
  double bin_width = 0.05;
  std::uint64_t seed = 1;
  int n_chains = 8;

  /// Throws InputError on inconsistent settings.
  void validate() const;
  double volume() const { return box_side * box_side * box_side; }
};

struct AcceptanceRates {
  double insert = 0.0;
  double remove = 0.0;
  double displace = 0.0;
};

struct GCMCResult {
  GCMCConfig config;
  /// g per histogram bin, stored at the bin centres.
  RadialFunction g;
  Eigen::ArrayXd g_stderr;
  std::vector<bool> missing;  ///< bins without a single pair count
  Eigen::ArrayXd pair_counts;
  double rho0_mean = 0.0;
  double rho0_err = 0.0;
  double mean_N = 0.0;
  double var_N = 0.0;
  std::vector<std::uint64_t> N_histogram;
  AcceptanceRates acceptance;
  std::uint64_t samples = 0;
  std::vector<std::string> warnings;

  double bin_lo(Eigen::Index i) const { return static_cast<double>(i) * config.bin_width; }
  double bin_hi(Eigen::Index i) const { return static_cast<double>(i + 1) * config.bin_width; }
};

/// Bin centres of the pair histogram, the grid of GCMCResult::g.
GridPtr histogram_grid(const GCMCConfig& cfg);

/// Metropolis acceptance for inserting particle N+1 (energy change dU).
double insertion_acceptance(double z, double V, std::size_t N, double beta, double dU);
/// Metropolis acceptance for deleting one of N particles (energy change dU).
double deletion_acceptance(double z, double V, std::size_t N, double beta, double dU);
double displacement_acceptance(double beta, double dU);

/// State of one Markov chain: enough to continue it bit-identically.
struct ChainState {
  std::mt19937_64 rng;
  std::vector<Eigen::Vector3d> positions;
  std::uint64_t moves_done = 0;
};

/// Fresh state for chain `index`, seeded from cfg.seed and the index.
ChainState initial_chain_state(const GCMCConfig& cfg, int index);
/// Runs `moves` Metropolis moves without collecting statistics.
ChainState advance_chain(const Potential& u, const GCMCConfig& cfg, ChainState state, std::uint64_t moves);

/// Binary checkpoint, little-endian, in this order:
///   char[4] "BIGC"; u32 version (1); f64 box_side; u64 moves_done;
///   u32 rng_text_length; rng_text (std::mt19937_64 stream form);
///   u64 N; N x 3 f64 positions.
void write_checkpoint(const std::filesystem::path& path, const ChainState& s, double box_side);
ChainState read_checkpoint(const std::filesystem::path& path, double box_side);

/// Runs cfg.n_chains independent chains (in parallel) and merges them.
/// Errors come from a jackknife over blocks_per_chain blocks of every chain.
GCMCResult run_gcmc(const Potential& u, const GCMCConfig& cfg);
/// Same, adding a warning when z lies outside the gas-phase window of `s`.
GCMCResult run_gcmc(const ModelSetup& s, GCMCConfig cfg);

/// y = g / <e^{-beta u}>_bin per bin, with the Boltzmann factor averaged over
/// each shell's volume. Missing bins carry NaN and missing = true.
struct CavityEstimate {
  RadialFunction y;
  Eigen::ArrayXd stderr_;
  std::vector<bool> missing;
};
CavityEstimate estimate_cavity(const GCMCResult& result, const Potential& u, double beta);

/// GCMC result in forward-result form (backend "gcmc").
ForwardResult gcmc_forward_result(const GCMCResult& result, const Potential& u, double beta);

/// Volume average of g from another backend over each bin of `result`.
Eigen::ArrayXd bin_average(const RadialFunction& g, const GCMCResult& result);

}  // namespace boltzinv
