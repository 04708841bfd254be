#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "boltzinv/errors.hpp"
#include "boltzinv/gcmc.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace boltzinv;

namespace {

GCMCConfig ideal_config() {
  GCMCConfig c;
  c.beta = 1.0;
  c.z = 10.0 / 1728.0;
  c.n_sample = 100000;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("GCMC configuration validation") {
  GCMCConfig c = ideal_config();
  CHECK_NOTHROW(c.validate());
  auto bad = [](auto mutate) {
    GCMCConfig c = ideal_config();
    mutate(c);
    return c;
  };
  CHECK_THROWS_AS(bad([](GCMCConfig& c) { c.box_side = 0.0; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](GCMCConfig& c) { c.r_cut = 6.5; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](GCMCConfig& c) { c.mix = {0.3, 0.3, 0.3}; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](GCMCConfig& c) { c.mix = {0.3, 0.2, 0.5}; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](GCMCConfig& c) { c.bin_width = 0.3; }).validate(), InputError);
  CHECK_THROWS_AS(bad([](GCMCConfig& c) { c.n_chains = 0; }).validate(), InputError);
  CHECK_THROWS_AS(run_gcmc(Potential::zero(fixture::reference_params()), bad([](GCMCConfig& c) { c.box_side = -1.0; })),
                  InputError);
}

TEST_CASE("detailed balance of the acceptance rules") {
  // Stationary weight of an N-particle state: z^N e^{-beta U} / N!, per unit
  // volume of configuration space. Insertion proposes a point with density
  // 1/V; deleting any of the N+1 particles reverses one of the N+1
  // equivalent labelled insertions, so the reverse flow is pi(N+1) A_del.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U01(0.0, 1.0);
  std::uniform_int_distribution<int> Ndist(0, 40);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double z = std::exp(-8.0 * U01(rng));
    const double V = 10.0 + 2000.0 * U01(rng);
    const double beta = 0.05 + 2.0 * U01(rng);
    const double U0 = 20.0 * (U01(rng) - 0.5);
    const double dU = 10.0 * (U01(rng) - 0.5);
    const auto N = static_cast<std::size_t>(Ndist(rng));
    auto log_pi = [&](std::size_t n, double energy) { return n * std::log(z) - beta * energy - std::lgamma(n + 1.0); };
    const double forward = std::exp(log_pi(N, U0)) / V * insertion_acceptance(z, V, N, beta, dU);
    const double backward = std::exp(log_pi(N + 1, U0 + dU)) * deletion_acceptance(z, V, N + 1, beta, -dU);
    worst = std::max(worst, std::abs(forward - backward) / std::max(forward, backward));
    const double fd = std::exp(-beta * U0) * displacement_acceptance(beta, dU);
    const double bd = std::exp(-beta * (U0 + dU)) * displacement_acceptance(beta, -dU);
    worst = std::max(worst, std::abs(fd - bd) / std::max(fd, bd));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("ideal gas calibration") {
  const auto p = fixture::reference_params();
  const auto cfg = ideal_config();
  const auto r = run_gcmc(Potential::zero(p), cfg);
  CHECK(std::abs(r.rho0_mean - cfg.z) < 3.0 * r.rho0_err);
  CHECK(r.var_N / r.mean_N >= 0.9);
  CHECK(r.var_N / r.mean_N <= 1.1);
  // The innermost shells are tiny and may see no pair at all.
  int outside = 0, missing = 0;
  for (Eigen::Index i = 0; i < r.g.size(); ++i) {
    if (r.missing[i]) {
      ++missing;
      continue;
    }
    outside += std::abs(r.g[i] - 1.0) > 3.0 * r.g_stderr[i];
  }
  CHECK(outside <= 1);
  CHECK(missing <= 2);
  const auto y = estimate_cavity(r, Potential::zero(p), cfg.beta);
  for (Eigen::Index i = 0; i < y.y.size(); ++i) {
    CHECK(y.missing[i] == r.missing[i]);
    if (!y.missing[i]) CHECK(y.y[i] == doctest::Approx(r.g[i]).epsilon(1e-14));
  }
}

TEST_CASE("GCMC agrees with the expansion in the dilute gas") {
  const auto& s = fixture::reference_setup();
  GCMCConfig cfg;
  cfg.z = 0.25 * s.window.z_max_gas;
  cfg.n_sample = 200000;
  cfg.seed = 11;
  const auto r = run_gcmc(s, cfg);
  CHECK(r.warnings.empty());
  const auto ex = rdf_expansion(s, cfg.z, 3);
  const Eigen::ArrayXd g_ex = bin_average(ex.g, r);
  const auto y = estimate_cavity(r, s.potential, s.beta);
  const Eigen::ArrayXd y_ex = bin_average(ex.y, r);
  int checked = 0;
  for (Eigen::Index i = 0; i < r.g.size(); ++i) {
    const double c = r.g.r(i);
    if (c < 0.9 || c > 3.0) continue;
    ++checked;
    INFO("r = " << c);
    CHECK(std::abs(r.g[i] - g_ex[i]) <= 3.0 * r.g_stderr[i]);
    CHECK(std::abs(y.y[i] - y_ex[i]) <= 3.0 * y.stderr_[i]);
  }
  CHECK(checked == 42);
  CHECK(std::abs(r.rho0_mean - ex.rho0) < 3.0 * r.rho0_err);
}

TEST_CASE("repulsive core leaves missing bins") {
  auto p = fixture::reference_params();
  const auto u = Potential::lj(1.0, 1.0, p);
  GCMCConfig cfg;
  cfg.beta = 1.0;
  cfg.z = 0.01;
  cfg.n_sample = 50000;
  const auto r = run_gcmc(u, cfg);
  CHECK(r.mean_N > 5.0);
  const auto y = estimate_cavity(r, u, cfg.beta);
  for (Eigen::Index i = 0; i < r.g.size(); ++i) {
    if (r.bin_hi(i) > 0.7) break;
    CHECK(r.g[i] == 0.0);
    CHECK(r.missing[i]);
    CHECK(y.missing[i]);
    CHECK(std::isnan(y.y[i]));
  }
  const auto fr = gcmc_forward_result(r, u, cfg.beta);
  CHECK(fr.backend == "gcmc");
  CHECK(fr.missing[0]);
}

TEST_CASE("activity sweep and chain-count independence") {
  const auto& s = fixture::reference_setup();
  GCMCConfig cfg;
  cfg.n_sample = 40000;
  double prev = -1.0;
  for (double frac : {0.05, 0.25, 0.5, 1.0}) {
    cfg.z = frac * s.window.z_max_gas;
    const auto r = run_gcmc(s, cfg);
    CHECK(r.mean_N > prev);
    prev = r.mean_N;
  }
  cfg.z = 0.25 * s.window.z_max_gas;
  cfg.n_chains = 8;
  const auto a = run_gcmc(s, cfg);
  cfg.n_chains = 4;
  cfg.n_sample = 80000;
  const auto b = run_gcmc(s, cfg);
  CHECK(std::abs(a.rho0_mean - b.rho0_mean) < 3.0 * std::hypot(a.rho0_err, b.rho0_err));
}

TEST_CASE("GCMC determinism and checkpoints") {
  const auto p = fixture::reference_params();
  const auto u = Potential::lj(1.0, 1.0, p);
  GCMCConfig cfg;
  cfg.beta = 0.1;
  cfg.z = 0.006;
  cfg.n_sample = 8000;
  const auto a = run_gcmc(u, cfg);
  const auto b = run_gcmc(u, cfg);
  CHECK((a.g.values == b.g.values).all());

  const auto dir = std::filesystem::temp_directory_path() / "boltzinv_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto file = dir / "chain0.bin";
  const ChainState start = initial_chain_state(cfg, 0);
  const ChainState half = advance_chain(u, cfg, start, 3000);
  write_checkpoint(file, half, cfg.box_side);
  const ChainState restored = read_checkpoint(file, cfg.box_side);
  CHECK(restored.moves_done == 3000);
  REQUIRE(restored.positions.size() == half.positions.size());
  const ChainState resumed = advance_chain(u, cfg, restored, 3000);
  const ChainState straight = advance_chain(u, cfg, start, 6000);
  REQUIRE(resumed.positions.size() == straight.positions.size());
  for (std::size_t i = 0; i < straight.positions.size(); ++i) CHECK(resumed.positions[i] == straight.positions[i]);
  CHECK(resumed.rng == straight.rng);

  CHECK_THROWS_AS(read_checkpoint(file, 10.0), InputError);
  {
    std::ofstream junk(dir / "junk.bin", std::ios::binary);
    junk << "nope";
  }
  CHECK_THROWS_AS(read_checkpoint(dir / "junk.bin", cfg.box_side), InputError);
  CHECK_THROWS_AS(read_checkpoint(dir / "absent.bin", cfg.box_side), InputError);
  std::filesystem::remove_all(dir);
}
