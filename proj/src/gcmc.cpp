#include "boltzinv/gcmc.hpp"

#include <bit>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "boltzinv/errors.hpp"
#include "boltzinv/parallel.hpp"

namespace boltzinv {

void GCMCConfig::validate() const {
  if (!(box_side > 0.0)) throw InputError("box side must be positive");
  if (!(beta > 0.0)) throw InputError("beta must be positive");
  if (!(z >= 0.0)) throw InputError("activity must be non-negative");
  if (!(r_cut > 0.0) || r_cut > 0.5 * box_side) {
    throw InputError(fmt::format("cutoff {} must lie in (0, box_side/2 = {}]", r_cut, 0.5 * box_side));
  }
  if (mix.insert < 0.0 || mix.remove < 0.0 || mix.displace < 0.0 ||
      std::abs(mix.insert + mix.remove + mix.displace - 1.0) > 1e-12) {
    throw InputError("move probabilities must be non-negative and sum to 1");
  }
  if (mix.insert != mix.remove) throw InputError("insertion and deletion probabilities must be equal");
  if (!(bin_width > 0.0) || bin_width > box_side / 50.0) {
    throw InputError(fmt::format("bin width must lie in (0, box_side/50 = {}]", box_side / 50.0));
  }
  if (!(max_displacement > 0.0)) throw InputError("maximum displacement must be positive");
  if (n_chains < 1 || blocks_per_chain < 1) throw InputError("need at least one chain and one block");
  if (sample_interval < 1) throw InputError("sample interval must be at least 1");
  if (n_sample < sample_interval * static_cast<std::uint64_t>(blocks_per_chain)) {
    throw InputError("n_sample too small for the requested blocks");
  }
}

double insertion_acceptance(double z, double V, std::size_t N, double beta, double dU) {
  return std::min(1.0, z * V / static_cast<double>(N + 1) * std::exp(-beta * dU));
}

double deletion_acceptance(double z, double V, std::size_t N, double beta, double dU) {
  return std::min(1.0, static_cast<double>(N) / (z * V) * std::exp(-beta * dU));
}

double displacement_acceptance(double beta, double dU) { return std::min(1.0, std::exp(-beta * dU)); }

namespace {

// Pair energy as a function of squared distance, zero beyond the cutoff.
class PairEnergy {
 public:
  PairEnergy(const Potential& u, double r_cut) : u_(u), rc2_(r_cut * r_cut) {
    if (const auto* lj = std::get_if<LennardJones>(&u.form())) {
      kind_ = Kind::lj;
      eps4_ = 4.0 * lj->epsilon;
      sigma2_ = lj->sigma * lj->sigma;
    } else if (std::holds_alternative<ZeroPotential>(u.form())) {
      kind_ = Kind::zero;
    }
  }

  double operator()(double r2) const {
    if (r2 >= rc2_) return 0.0;
    switch (kind_) {
      case Kind::zero:
        return 0.0;
      case Kind::lj: {
        if (r2 <= 0.0) return std::numeric_limits<double>::infinity();
        const double s2 = sigma2_ / r2;
        const double s6 = s2 * s2 * s2;
        return eps4_ * (s6 * s6 - s6);
      }
      default:
        return u_(std::sqrt(r2));
    }
  }

 private:
  enum class Kind { lj, zero, generic };
  const Potential& u_;
  double rc2_;
  Kind kind_ = Kind::generic;
  double eps4_ = 0.0, sigma2_ = 0.0;
};

double min_image(double d, double L) {
  if (d > 0.5 * L) return d - L;
  if (d < -0.5 * L) return d + L;
  return d;
}

double wrap(double x, double L) {
  x = std::fmod(x, L);
  return x < 0.0 ? x + L : x;
}

struct Block {
  Eigen::ArrayXd hist;
  double sum_N = 0.0;
  double samples = 0.0;
};

class Chain {
 public:
  Chain(const PairEnergy& pe, const GCMCConfig& cfg, ChainState& st)
      : pe_(pe), cfg_(cfg), st_(st), L_(cfg.box_side), V_(cfg.volume()) {}

  // Energy of a particle at x with all others except index `skip`.
  double energy_at(const Eigen::Vector3d& x, std::size_t skip) const {
    double e = 0.0;
    const auto& p = st_.positions;
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j == skip) continue;
      const double dx = min_image(x[0] - p[j][0], L_);
      const double dy = min_image(x[1] - p[j][1], L_);
      const double dz = min_image(x[2] - p[j][2], L_);
      e += pe_(dx * dx + dy * dy + dz * dz);
    }
    return e;
  }

  void move() {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    auto& rng = st_.rng;
    auto& p = st_.positions;
    const double choice = U(rng);
    const std::size_t N = p.size();
    ++st_.moves_done;
    if (choice < cfg_.mix.insert) {
      ++attempted[0];
      const Eigen::Vector3d x(U(rng) * L_, U(rng) * L_, U(rng) * L_);
      const double dU = energy_at(x, p.size());
      if (U(rng) < insertion_acceptance(cfg_.z, V_, N, cfg_.beta, dU)) {
        p.push_back(x);
        ++accepted[0];
      }
    } else if (choice < cfg_.mix.insert + cfg_.mix.remove) {
      ++attempted[1];
      if (N == 0) return;
      const std::size_t i = std::min<std::size_t>(N - 1, static_cast<std::size_t>(U(rng) * static_cast<double>(N)));
      const double dU = -energy_at(p[i], i);
      if (U(rng) < deletion_acceptance(cfg_.z, V_, N, cfg_.beta, dU)) {
        p[i] = p.back();
        p.pop_back();
        ++accepted[1];
      }
    } else {
      ++attempted[2];
      if (N == 0) return;
      const std::size_t i = std::min<std::size_t>(N - 1, static_cast<std::size_t>(U(rng) * static_cast<double>(N)));
      const double d = cfg_.max_displacement;
      Eigen::Vector3d x;
      for (int k = 0; k < 3; ++k) x[k] = wrap(p[i][k] + d * (2.0 * U(rng) - 1.0), L_);
      const double dU = energy_at(x, i) - energy_at(p[i], i);
      if (U(rng) < displacement_acceptance(cfg_.beta, dU)) {
        p[i] = x;
        ++accepted[2];
      }
    }
  }

  void sample(Block& b, std::vector<std::uint64_t>& N_hist) const {
    const auto& p = st_.positions;
    const std::size_t N = p.size();
    if (N >= N_hist.size()) N_hist.resize(N + 1, 0);
    ++N_hist[N];
    b.sum_N += static_cast<double>(N);
    b.samples += 1.0;
    const double inv_w = 1.0 / cfg_.bin_width;
    const Eigen::Index nb = b.hist.size();
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t j = i + 1; j < N; ++j) {
        const double dx = min_image(p[i][0] - p[j][0], L_);
        const double dy = min_image(p[i][1] - p[j][1], L_);
        const double dz = min_image(p[i][2] - p[j][2], L_);
        const auto k = static_cast<Eigen::Index>(std::sqrt(dx * dx + dy * dy + dz * dz) * inv_w);
        if (k < nb) b.hist[k] += 1.0;
      }
    }
  }

  std::uint64_t attempted[3] = {0, 0, 0};
  std::uint64_t accepted[3] = {0, 0, 0};

 private:
  const PairEnergy& pe_;
  const GCMCConfig& cfg_;
  ChainState& st_;
  double L_, V_;
};

Eigen::Index bin_count(const GCMCConfig& cfg) {
  return static_cast<Eigen::Index>(std::floor(0.5 * cfg.box_side / cfg.bin_width + 1e-9));
}

struct ChainOutput {
  std::vector<Block> blocks;
  std::vector<std::uint64_t> N_hist;
  std::uint64_t attempted[3] = {0, 0, 0};
  std::uint64_t accepted[3] = {0, 0, 0};
};

ChainOutput run_one_chain(const Potential& u, const GCMCConfig& cfg, int index) {
  ChainState st = initial_chain_state(cfg, index);
  const PairEnergy pe(u, cfg.r_cut);
  Chain chain(pe, cfg, st);
  for (std::uint64_t k = 0; k < cfg.n_equilibrate; ++k) chain.move();
  for (int t = 0; t < 3; ++t) chain.attempted[t] = chain.accepted[t] = 0;
  ChainOutput out;
  const Eigen::Index nb = bin_count(cfg);
  out.blocks.assign(cfg.blocks_per_chain, Block{Eigen::ArrayXd::Zero(nb), 0.0, 0.0});
  const std::uint64_t per_block = cfg.n_sample / static_cast<std::uint64_t>(cfg.blocks_per_chain);
  for (std::uint64_t k = 0; k < cfg.n_sample; ++k) {
    chain.move();
    if ((k + 1) % cfg.sample_interval == 0) {
      const auto b = std::min<std::uint64_t>(k / per_block, cfg.blocks_per_chain - 1);
      chain.sample(out.blocks[b], out.N_hist);
    }
  }
  for (int t = 0; t < 3; ++t) {
    out.attempted[t] = chain.attempted[t];
    out.accepted[t] = chain.accepted[t];
  }
  return out;
}

// Volume average over the shell [lo, hi] by the midpoint rule in r.
template <typename F>
double shell_average(F&& fn, double lo, double hi) {
  constexpr int n = 32;
  const double h = (hi - lo) / n;
  double num = 0.0, den = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = lo + (k + 0.5) * h;
    num += r * r * fn(r);
    den += r * r;
  }
  return num / den;
}

void put_bytes(std::ostream& os, std::uint64_t v, int n) {
  for (int k = 0; k < n; ++k) os.put(static_cast<char>((v >> (8 * k)) & 0xff));
}

std::uint64_t get_bytes(std::istream& is, int n) {
  std::uint64_t v = 0;
  for (int k = 0; k < n; ++k) {
    const int c = is.get();
    if (c == EOF) throw InputError("checkpoint file is truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * k);
  }
  return v;
}

void put_f64(std::ostream& os, double x) { put_bytes(os, std::bit_cast<std::uint64_t>(x), 8); }
double get_f64(std::istream& is) { return std::bit_cast<double>(get_bytes(is, 8)); }

constexpr char kMagic[4] = {'B', 'I', 'G', 'C'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

ChainState initial_chain_state(const GCMCConfig& cfg, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                    static_cast<std::uint32_t>(index), 0x67636d63u};
  ChainState s;
  s.rng.seed(seq);
  return s;
}

ChainState advance_chain(const Potential& u, const GCMCConfig& cfg, ChainState state, std::uint64_t moves) {
  cfg.validate();
  const PairEnergy pe(u, cfg.r_cut);
  Chain chain(pe, cfg, state);
  for (std::uint64_t k = 0; k < moves; ++k) chain.move();
  return state;
}

void write_checkpoint(const std::filesystem::path& path, const ChainState& s, double box_side) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError(fmt::format("cannot write checkpoint {}", path.string()));
  os.write(kMagic, 4);
  put_bytes(os, kVersion, 4);
  put_f64(os, box_side);
  put_bytes(os, s.moves_done, 8);
  std::ostringstream rng_text;
  rng_text << s.rng;
  const std::string text = rng_text.str();
  put_bytes(os, text.size(), 4);
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  put_bytes(os, s.positions.size(), 8);
  for (const auto& x : s.positions)
    for (int k = 0; k < 3; ++k) put_f64(os, x[k]);
  if (!os) throw InputError(fmt::format("failed writing checkpoint {}", path.string()));
}

ChainState read_checkpoint(const std::filesystem::path& path, double box_side) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError(fmt::format("cannot open checkpoint {}", path.string()));
  char magic[4];
  is.read(magic, 4);
  if (!is || !std::equal(magic, magic + 4, kMagic)) throw InputError("not a chain checkpoint file");
  const auto version = static_cast<std::uint32_t>(get_bytes(is, 4));
  if (version != kVersion) throw InputError(fmt::format("unsupported checkpoint version {}", version));
  const double L = get_f64(is);
  if (L != box_side) throw InputError(fmt::format("checkpoint box side {} does not match {}", L, box_side));
  ChainState s;
  s.moves_done = get_bytes(is, 8);
  const auto len = get_bytes(is, 4);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw InputError("checkpoint file is truncated");
  std::istringstream rng_text(text);
  rng_text >> s.rng;
  if (!rng_text) throw InputError("corrupt random-number state in checkpoint");
  const auto n = get_bytes(is, 8);
  s.positions.resize(n);
  for (auto& x : s.positions) {
    for (int k = 0; k < 3; ++k) {
      x[k] = get_f64(is);
      if (!(x[k] >= 0.0 && x[k] < L)) throw InputError("checkpoint position outside the box");
    }
  }
  return s;
}

GridPtr histogram_grid(const GCMCConfig& cfg) {
  const Eigen::Index nb = bin_count(cfg);
  Eigen::ArrayXd centres(nb);
  for (Eigen::Index i = 0; i < nb; ++i) centres[i] = 0.5 * (i * cfg.bin_width + (i + 1) * cfg.bin_width);
  return make_grid(RadialGrid(std::move(centres)));
}

GCMCResult run_gcmc(const Potential& u, const GCMCConfig& cfg) {
  cfg.validate();
  std::vector<ChainOutput> chains(cfg.n_chains);
  parallel_for(cfg.n_chains, [&](Eigen::Index c) { chains[c] = run_one_chain(u, cfg, static_cast<int>(c)); });

  GCMCResult res;
  res.config = cfg;
  const Eigen::Index nb = bin_count(cfg);
  const double V = cfg.volume();
  Eigen::ArrayXd shell(nb);
  for (Eigen::Index i = 0; i < nb; ++i) {
    const double lo = i * cfg.bin_width, hi = (i + 1) * cfg.bin_width;
    shell[i] = 4.0 * std::numbers::pi / 3.0 * (hi * hi * hi - lo * lo * lo);
  }

  std::vector<const Block*> blocks;
  Block total{Eigen::ArrayXd::Zero(nb), 0.0, 0.0};
  std::uint64_t att[3] = {0, 0, 0}, acc[3] = {0, 0, 0};
  for (const auto& c : chains) {
    for (const auto& b : c.blocks) {
      blocks.push_back(&b);
      total.hist += b.hist;
      total.sum_N += b.sum_N;
      total.samples += b.samples;
    }
    if (c.N_hist.size() > res.N_histogram.size()) res.N_histogram.resize(c.N_hist.size(), 0);
    for (std::size_t n = 0; n < c.N_hist.size(); ++n) res.N_histogram[n] += c.N_hist[n];
    for (int t = 0; t < 3; ++t) {
      att[t] += c.attempted[t];
      acc[t] += c.accepted[t];
    }
  }
  auto rate = [](std::uint64_t a, std::uint64_t n) { return n ? static_cast<double>(a) / static_cast<double>(n) : 0.0; };
  res.acceptance = {rate(acc[0], att[0]), rate(acc[1], att[1]), rate(acc[2], att[2])};
  res.samples = static_cast<std::uint64_t>(total.samples);

  // g = rho2 / rho^2 with rho = sum_N / (S V), rho2 = 2 H / (S V shell).
  auto estimate = [&](const Eigen::ArrayXd& H, double sum_N, double S, Eigen::ArrayXd& g, double& rho) {
    rho = sum_N / (S * V);
    if (sum_N > 0.0) g = 2.0 * H * S * V / (sum_N * sum_N * shell);
    else g.setZero(nb);
  };
  Eigen::ArrayXd g_all(nb);
  double rho_all = 0.0;
  estimate(total.hist, total.sum_N, total.samples, g_all, rho_all);

  // Jackknife over blocks.
  const auto B = static_cast<double>(blocks.size());
  Eigen::ArrayXd g_sq = Eigen::ArrayXd::Zero(nb), g_sum = Eigen::ArrayXd::Zero(nb);
  double rho_sum = 0.0, rho_sq = 0.0;
  for (const Block* b : blocks) {
    Eigen::ArrayXd g_b(nb);
    double rho_b = 0.0;
    estimate(total.hist - b->hist, total.sum_N - b->sum_N, total.samples - b->samples, g_b, rho_b);
    g_sum += g_b;
    g_sq += g_b * g_b;
    rho_sum += rho_b;
    rho_sq += rho_b * rho_b;
  }
  auto jack = [B](double sum, double sq) { return std::sqrt(std::max(0.0, (B - 1.0) / B * (sq - sum * sum / B))); };
  res.g_stderr.resize(nb);
  for (Eigen::Index i = 0; i < nb; ++i) res.g_stderr[i] = B > 1 ? jack(g_sum[i], g_sq[i]) : 0.0;
  res.rho0_mean = rho_all;
  res.rho0_err = B > 1 ? jack(rho_sum, rho_sq) : 0.0;

  res.pair_counts = total.hist;
  res.missing.resize(nb);
  for (Eigen::Index i = 0; i < nb; ++i) res.missing[i] = total.hist[i] == 0.0;
  res.g = RadialFunction(histogram_grid(cfg), g_all, 0.0);

  double m = 0.0, m2 = 0.0, cnt = 0.0;
  for (std::size_t n = 0; n < res.N_histogram.size(); ++n) {
    const double w = static_cast<double>(res.N_histogram[n]);
    m += w * n;
    m2 += w * n * n;
    cnt += w;
  }
  res.mean_N = cnt > 0 ? m / cnt : 0.0;
  res.var_N = cnt > 1 ? (m2 - m * m / cnt) / (cnt - 1.0) : 0.0;
  if (res.mean_N < 2.0) res.warnings.push_back(fmt::format("mean particle number {:.3g} is very small", res.mean_N));
  return res;
}

GCMCResult run_gcmc(const ModelSetup& s, GCMCConfig cfg) {
  cfg.beta = s.beta;
  GCMCResult res = run_gcmc(s.potential, cfg);
  if (!(cfg.z > 0.0 && cfg.z < s.window.z_max_gas)) {
    res.warnings.push_back(
        fmt::format("activity z = {:.6g} outside gas-phase window (0, {:.6g})", cfg.z, s.window.z_max_gas));
  }
  return res;
}

Eigen::ArrayXd bin_average(const RadialFunction& g, const GCMCResult& result) {
  Eigen::ArrayXd out(result.g.size());
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out[i] = shell_average([&](double r) { return g.at(r); }, result.bin_lo(i), result.bin_hi(i));
  }
  return out;
}

CavityEstimate estimate_cavity(const GCMCResult& result, const Potential& u, double beta) {
  const Eigen::Index n = result.g.size();
  Eigen::ArrayXd y(n), err(n);
  std::vector<bool> missing(result.missing);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double boltz =
        shell_average([&](double r) { return std::exp(-beta * u(r)); }, result.bin_lo(i), result.bin_hi(i));
    if (missing[i] || !(boltz > 0.0)) {
      missing[i] = true;
      y[i] = err[i] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    y[i] = result.g[i] / boltz;
    err[i] = result.g_stderr[i] / boltz;
  }
  return {RadialFunction(result.g.grid, y, 0.0), err, missing};
}

ForwardResult gcmc_forward_result(const GCMCResult& result, const Potential& u, double beta) {
  const CavityEstimate cav = estimate_cavity(result, u, beta);
  ForwardResult f;
  f.backend = "gcmc";
  f.order = 0;
  f.g = result.g;
  f.y = cav.y;
  f.log_y = cav.y.with_values(cav.y.values.log());
  f.h = result.g.with_values(result.g.values - 1.0);
  f.rho0 = result.rho0_mean;
  f.g_stderr = result.g_stderr;
  f.missing = cav.missing;
  return f;
}

}  // namespace boltzinv
