#include "boltzinv/cluster.hpp"

#include <Eigen/Geometry>
#include <cmath>
#include <fmt/format.h>
#include <mutex>
#include <numbers>
#include <random>

#include "boltzinv/convolution.hpp"
#include "boltzinv/errors.hpp"
#include "boltzinv/parallel.hpp"
#include "boltzinv/spaces.hpp"

namespace boltzinv {

RadialFunction a3_analytic(const RadialFunction& f) {
  const double I1 = f.integral();
  const RadialFunction ff = radial_convolve(f, f);
  Eigen::ArrayXd a3 = 2.0 * I1 * f.values + ff.values * (1.0 + f.values);
  return RadialFunction(f.grid, std::move(a3), std::min(f.tail_exponent, ff.tail_exponent));
}

namespace {

// Proposal for a displacement X in R^3 with density proportional to |f|:
// piecewise constant in |X| over grid panels (panel mean of |f|), constant
// inside the first node, power tail beyond r_max.
class AbsMayerSampler {
 public:
  explicit AbsMayerSampler(const RadialFunction& f) : t_(f.grid->nodes()) {
    const Eigen::ArrayXd h = f.values.abs();
    const Eigen::Index n = t_.size();
    level_.resize(n + 1);
    cdf_.resize(n + 2);
    cdf_[0] = 0.0;
    auto shell = [](double a, double b) { return 4.0 * std::numbers::pi / 3.0 * (b * b * b - a * a * a); };
    level_[0] = h[0];
    cdf_[1] = h[0] * shell(0.0, t_[0]);
    for (Eigen::Index j = 0; j + 1 < n; ++j) {
      level_[j + 1] = 0.5 * (h[j] + h[j + 1]);
      cdf_[j + 2] = cdf_[j + 1] + level_[j + 1] * shell(t_[j], t_[j + 1]);
    }
    tail_level_ = h[n - 1];
    p_ = f.tail_exponent;
    const double tail_mass = (tail_level_ > 0.0 && std::isfinite(p_)) ? power_tail_mass(tail_level_, t_[n - 1], p_) : 0.0;
    cdf_[n + 1] = cdf_[n] + tail_mass;
    total_ = cdf_[n + 1];
  }

  double total() const { return total_; }

  template <typename Rng>
  Eigen::Vector3d sample(Rng& rng) const {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double target = U(rng) * total_;
    const Eigen::Index n = t_.size();
    Eigen::Index seg = std::upper_bound(cdf_.data() + 1, cdf_.data() + n + 2, target) - cdf_.data() - 1;
    seg = std::min<Eigen::Index>(seg, n);
    double r;
    if (seg == n) {
      r = t_[n - 1] * std::pow(1.0 - U(rng), -1.0 / (p_ - 3.0));
    } else {
      const double a = seg == 0 ? 0.0 : t_[seg - 1];
      const double b = t_[seg];
      r = std::cbrt(a * a * a + U(rng) * (b * b * b - a * a * a));
    }
    // Uniform direction.
    const double cz = 2.0 * U(rng) - 1.0;
    const double phi = 2.0 * std::numbers::pi * U(rng);
    const double sz = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    return r * Eigen::Vector3d(sz * std::cos(phi), sz * std::sin(phi), cz);
  }

  double density(const Eigen::Vector3d& x) const {
    const double r = x.norm();
    const Eigen::Index n = t_.size();
    if (r >= t_[n - 1]) {
      if (!(tail_level_ > 0.0) || !std::isfinite(p_)) return r == t_[n - 1] ? level_[n - 1] / total_ : 0.0;
      return tail_level_ * std::pow(t_[n - 1] / r, p_) / total_;
    }
    const Eigen::Index seg = std::upper_bound(t_.data(), t_.data() + n, r) - t_.data();
    return level_[seg] / total_;
  }

 private:
  const Eigen::ArrayXd& t_;
  Eigen::ArrayXd level_;
  Eigen::ArrayXd cdf_;
  double tail_level_ = 0.0;
  double p_ = 0.0;
  double total_ = 0.0;
};

// Edge index of (i, j), 0-based vertices, for up to 4 vertices.
int edge_index(int i, int j, int n) {
  int k = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b, ++k)
      if (a == i && b == j) return k;
  return -1;
}

struct GraphTable {
  int n;
  std::vector<std::vector<int>> graphs;  // edge indices per connected graph
};

GraphTable graph_table(int N) {
  GraphTable t{N, {}};
  for (const auto& g : enumerate_connected_graphs(N)) {
    std::vector<int> e;
    for (auto [i, j] : g.edges) e.push_back(edge_index(i - 1, j - 1, N));
    t.graphs.push_back(std::move(e));
  }
  return t;
}

struct ChainStats {
  double mean = 0.0;
  double var_of_mean = 0.0;
  std::uint64_t n = 0;
};

ChainStats run_chain(const GraphTable& table, const RadialFunction& f, const AbsMayerSampler& sampler, double r,
                     std::uint64_t samples, std::uint64_t seed, bool absolute) {
  const int N = table.n;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> coin(0, 1);
  std::vector<Eigen::Vector3d> pos(N, Eigen::Vector3d::Zero());
  pos[0] = Eigen::Vector3d(r, 0.0, 0.0);
  std::vector<double> fe(N * (N - 1) / 2);
  // Orders in which the free vertices (index >= 2) are placed.
  std::vector<std::vector<int>> orders;
  if (N == 3) orders = {{2}};
  else orders = {{2, 3}, {3, 2}};

  double sum = 0.0, sum2 = 0.0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    const auto& order = orders[orders.size() == 1 ? 0 : coin(rng)];
    std::vector<int> placed = {0, 1};
    for (int v : order) {
      std::uniform_int_distribution<std::size_t> pick(0, placed.size() - 1);
      pos[v] = pos[placed[pick(rng)]] + sampler.sample(rng);
      placed.push_back(v);
    }
    // Proposal density: average over orders of the sequential mixtures.
    double q = 0.0;
    for (const auto& ord : orders) {
      std::vector<int> pl = {0, 1};
      double qo = 1.0;
      for (int v : ord) {
        double mix = 0.0;
        for (int a : pl) mix += sampler.density(pos[v] - pos[a]);
        qo *= mix / static_cast<double>(pl.size());
        pl.push_back(v);
      }
      q += qo / static_cast<double>(orders.size());
    }
    int k = 0;
    for (int a = 0; a < N; ++a)
      for (int b = a + 1; b < N; ++b) fe[k++] = f.at((pos[a] - pos[b]).norm());
    double phi = 0.0;
    for (const auto& g : table.graphs) {
      double prod = 1.0;
      for (int e : g) prod *= fe[e];
      phi += prod;
    }
    const double x = q > 0.0 ? (absolute ? std::abs(phi) : phi) / q : 0.0;
    sum += x;
    sum2 += x * x;
  }
  ChainStats c;
  c.n = samples;
  c.mean = sum / static_cast<double>(samples);
  const double var = std::max(0.0, sum2 / static_cast<double>(samples) - c.mean * c.mean) *
                     static_cast<double>(samples) / std::max<double>(1.0, static_cast<double>(samples - 1));
  c.var_of_mean = var / static_cast<double>(samples);
  return c;
}

McEstimate merge(double r, const std::vector<ChainStats>& chains) {
  McEstimate e;
  e.r = r;
  bool degenerate = false;
  for (const auto& c : chains) {
    e.samples += c.n;
    if (!(c.var_of_mean > 0.0)) degenerate = true;
  }
  if (degenerate) {
    // Some chain saw no spread at all; fall back to equal weights.
    double m = 0.0, v = 0.0;
    for (const auto& c : chains) {
      m += c.mean;
      v += c.var_of_mean;
    }
    const double k = static_cast<double>(chains.size());
    e.mean = m / k;
    e.stderr_ = std::sqrt(v) / k;
    return e;
  }
  double wsum = 0.0, msum = 0.0;
  for (const auto& c : chains) {
    wsum += 1.0 / c.var_of_mean;
    msum += c.mean / c.var_of_mean;
  }
  e.mean = msum / wsum;
  e.stderr_ = std::sqrt(1.0 / wsum);
  return e;
}

std::uint64_t chain_seed(std::uint64_t master, std::size_t radius, int chain) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(radius), static_cast<std::uint32_t>(chain)};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
  return out[0];
}

}  // namespace

std::vector<McEstimate> connected_integral_mc(int N, const RadialFunction& f, const std::vector<double>& radii,
                                              const McOptions& opt, bool absolute) {
  if (N < 3 || N > 4) throw InputError(fmt::format("Monte Carlo graph integrals support N in {{3, 4}}, got {}", N));
  if (f.values[f.size() - 1] != 0.0 && !(f.tail_exponent > 3.0)) {
    throw InputError("Mayer function tail is not integrable");
  }
  std::vector<McEstimate> out(radii.size());
  if (f.values.isZero(0.0)) {
    for (std::size_t i = 0; i < radii.size(); ++i) out[i] = {radii[i], 0.0, 0.0, opt.budget};
    return out;
  }
  const GraphTable table = graph_table(N);
  const AbsMayerSampler sampler(f);
  const int chains = std::max(1, opt.chains);
  const std::uint64_t per_chain = std::max<std::uint64_t>(2, opt.budget / chains);
  std::vector<ChainStats> stats(radii.size() * chains);
  parallel_for(static_cast<Eigen::Index>(stats.size()), [&](Eigen::Index k) {
    const std::size_t i = static_cast<std::size_t>(k) / chains;
    const int c = static_cast<int>(k % chains);
    stats[k] = run_chain(table, f, sampler, radii[i], per_chain, chain_seed(opt.seed, i, c), absolute);
  });
  for (std::size_t i = 0; i < radii.size(); ++i) {
    out[i] = merge(radii[i], std::vector<ChainStats>(stats.begin() + i * chains, stats.begin() + (i + 1) * chains));
  }
  return out;
}

std::vector<McEstimate> aN_monte_carlo(int N, const RadialFunction& f, const std::vector<double>& radii,
                                       const McOptions& opt) {
  auto est = connected_integral_mc(N, f, radii, opt, false);
  const double fact = (N == 4) ? 2.0 : 1.0;
  for (auto& e : est) {
    e.mean /= fact;
    e.stderr_ /= fact;
  }
  return est;
}

namespace {

std::vector<double> a4_radii(const RadialFunction& f) {
  const double R = f.grid->r_max();
  std::vector<double> r;
  for (double x = 0.05; x < 0.7; x += 0.15) r.push_back(x);
  for (double x = 0.7; x < 2.5; x += 0.1) r.push_back(x);
  for (double x = 2.5; x < 6.0; x += 0.5) r.push_back(x);
  for (double x = 6.0; x < R; x *= 1.5) r.push_back(x);
  r.push_back(R);
  return r;
}

struct A4Key {
  std::size_t hash;
  std::uint64_t budget, seed;
  int chains;
  bool operator<(const A4Key& o) const {
    return std::tie(hash, budget, seed, chains) < std::tie(o.hash, o.budget, o.seed, o.chains);
  }
};

std::size_t hash_values(const RadialFunction& f) {
  std::size_t h = static_cast<std::size_t>(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    h ^= std::hash<double>{}(f.values[i]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= std::hash<double>{}(f.r(i)) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

}  // namespace

RadialFunction a4_profile(const RadialFunction& f, const McOptions& opt) {
  static std::mutex m;
  static std::map<A4Key, Eigen::ArrayXd> cache;
  const A4Key key{hash_values(f), opt.budget, opt.seed, opt.chains};
  {
    std::lock_guard lock(m);
    if (auto it = cache.find(key); it != cache.end()) return f.with_values(it->second);
  }
  const auto radii = a4_radii(f);
  const auto est = aN_monte_carlo(4, f, radii, opt);
  Eigen::ArrayXd v(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double r = f.r(i);
    if (r <= radii.front()) {
      v[i] = est.front().mean;
      continue;
    }
    std::size_t k = 1;
    while (k < radii.size() - 1 && radii[k] < r) ++k;
    const double t = std::clamp((r - radii[k - 1]) / (radii[k] - radii[k - 1]), 0.0, 1.0);
    v[i] = (1.0 - t) * est[k - 1].mean + t * est[k].mean;
  }
  std::lock_guard lock(m);
  cache.emplace(key, v);
  return f.with_values(std::move(v));
}

ClusterExpansion ursell_truncated(const RadialFunction& u, double beta, double z, int N_max, const McOptions& a4) {
  if (N_max < 2 || N_max > 4) throw InputError(fmt::format("truncation order must be 2, 3 or 4, got {}", N_max));
  ClusterExpansion e;
  e.N_max = N_max;
  e.z = z;
  const RadialFunction f = mayer_function(u, beta);
  e.coeffs.emplace(2, f);
  Eigen::ArrayXd omega = z * z * f.values;
  if (N_max >= 3) {
    auto a3 = a3_analytic(f);
    omega += z * z * z * a3.values;
    e.coeffs.emplace(3, std::move(a3));
  }
  if (N_max >= 4) {
    auto a4v = a4_profile(f, a4);
    omega += z * z * z * z * a4v.values;
    e.coeffs.emplace(4, std::move(a4v));
  }
  e.omega = f.with_values(std::move(omega));
  return e;
}

ClusterExpansion ursell_truncated(const ModelSetup& s, double z, int N_max, const ExpansionOptions& opt) {
  if (!opt.force && !(z >= 0.0 && z < s.window.z_max_gas)) {
    throw PreconditionError(fmt::format("activity z = {:.6g} outside gas-phase window [0, {:.6g})", z,
                                        s.window.z_max_gas));
  }
  return ursell_truncated(s.u, s.beta, z, N_max, opt.a4);
}

std::vector<InequalityReport> check_tree_graph_bound(const ModelSetup& s, const RadialFunction& W_sigma, int N,
                                                     const std::vector<double>& radii, const McOptions& opt) {
  const auto est = connected_integral_mc(N, s.f, radii, opt, true);
  const double pref = std::exp(N * s.beta * s.B) * std::pow(N, N - 2) * std::pow(s.mayer.c_beta, N - 1);
  std::vector<InequalityReport> out;
  for (const auto& e : est) {
    const double rhs = pref * W_sigma.at(e.r);
    out.push_back(InequalityReport::make(fmt::format("tree_graph_N{}_r{:.3g}", N, e.r), e.mean, rhs,
                                         e.mean <= rhs + 3.0 * e.stderr_,
                                         fmt::format("mc stderr {:.3g}, samples {}", e.stderr_, e.samples)));
  }
  return out;
}

UrsellDecayReport check_ursell_decay(const ClusterExpansion& e, const ModelSetup& s, const RadialFunction& W_sigma,
                                     double tail_from) {
  UrsellDecayReport rep;
  const double alpha = s.alpha();
  rep.c_omega = norm_linf_rho(e.omega, alpha);
  rep.finite = InequalityReport::make("ursell_decay_finite", rep.c_omega, std::numeric_limits<double>::infinity(),
                                      std::isfinite(rep.c_omega));
  const double z = e.z;
  const double K = s.mayer.c_beta * std::exp(s.beta * s.B + 1.0);
  const double pref = z * z * s.mayer.c_beta * std::exp(2.0 * (s.beta * s.B + 1.0)) / (1.0 - z * K);
  const RadialFunction Ws = W_sigma.compatible(e.omega) ? W_sigma : regrid(W_sigma, e.omega.grid);
  double worst = 0.0, worst_r = 0.0;
  for (Eigen::Index i = 0; i < e.omega.size(); ++i) {
    const double ratio = std::abs(e.omega[i]) / (pref * Ws[i]);
    if (ratio > worst) {
      worst = ratio;
      worst_r = e.omega.r(i);
    }
  }
  rep.envelope = InequalityReport::make("ursell_envelope", worst, 1.0, z * K < 1.0 && worst <= 1.0,
                                        fmt::format("max |omega|/envelope at r = {:.4g}", worst_r));
  double tail_dev = 0.0;
  const auto& f = e.coeffs.at(2);
  for (Eigen::Index i = 0; i < e.omega.size(); ++i) {
    if (e.omega.r(i) <= tail_from || f[i] == 0.0) continue;
    tail_dev = std::max(tail_dev, std::abs(e.omega[i] / (z * z * f[i]) - 1.0));
  }
  rep.tail = InequalityReport::make("ursell_tail_dominance", tail_dev, 0.1, tail_dev <= 0.1,
                                    fmt::format("r > {}", tail_from));
  rep.pass = rep.finite.pass && rep.envelope.pass && rep.tail.pass;
  return rep;
}

RadialFunction ursell_derivative(const RadialFunction& u, const RadialFunction& v, double beta, double z, int N_max) {
  if (N_max < 2 || N_max > 3) throw InputError("Ursell derivative supports N_max in {2, 3}");
  if (!u.compatible(v)) throw InputError("perturbation and potential live on different grids");
  const RadialFunction f = mayer_function(u, beta);
  RadialFunction dfr(f.grid, -beta * boltzmann_factor(u, beta) * v.values, std::min(f.tail_exponent, v.tail_exponent));
  Eigen::ArrayXd d = z * z * dfr.values;
  if (N_max >= 3) {
    const double I1 = f.integral();
    const double dI1 = dfr.integral();
    const RadialFunction ff = radial_convolve(f, f);
    // Both orders, so the result is the exact derivative of the discrete f * f.
    const Eigen::ArrayXd dff = radial_convolve(f, dfr).values + radial_convolve(dfr, f).values;
    d += z * z * z * (2.0 * dfr.values * I1 + 2.0 * f.values * dI1 + dff * (1.0 + f.values) + ff.values * dfr.values);
  }
  return RadialFunction(f.grid, std::move(d), dfr.tail_exponent);
}

RadialFunction ursell_difference(const RadialFunction& u, const RadialFunction& v, double beta, double z, int N_max) {
  if (N_max < 2 || N_max > 3) throw InputError("Ursell difference supports N_max in {2, 3}");
  if (!u.compatible(v)) throw InputError("perturbation and potential live on different grids");
  const RadialFunction f = mayer_function(u, beta);
  Eigen::ArrayXd dfv = boltzmann_factor(u, beta);
  for (Eigen::Index i = 0; i < f.size(); ++i) dfv[i] *= std::expm1(-beta * v[i]);
  const RadialFunction df(f.grid, std::move(dfv), std::min(f.tail_exponent, v.tail_exponent));
  Eigen::ArrayXd d = z * z * df.values;
  if (N_max >= 3) {
    const double I1 = f.integral();
    const double dI1 = df.integral();
    const RadialFunction ff = radial_convolve(f, f);
    const Eigen::ArrayXd dff =
        radial_convolve(f, df).values + radial_convolve(df, f).values + radial_convolve(df, df).values;
    // a3 = 2 f I1 + (f*f)(1 + f), differenced term by term.
    const Eigen::ArrayXd d_fI1 = df.values * I1 + f.values * dI1 + df.values * dI1;
    const Eigen::ArrayXd d_ff1 = dff * (1.0 + f.values) + ff.values * df.values + dff * df.values;
    d += z * z * z * (2.0 * d_fI1 + d_ff1);
  }
  return RadialFunction(f.grid, std::move(d), df.tail_exponent);
}

RadialFunction ursell_derivative(const ModelSetup& s, const RadialFunction& v, double z, int N_max) {
  const double nv = norm_vu(v, s.u, s.params().r0, s.alpha());
  if (nv > 0.5 * s.radius.delta0 * (1.0 + 1e-12)) {
    throw PreconditionError(fmt::format("perturbation norm {:.4g} exceeds delta0/2 = {:.4g}", nv, 0.5 * s.radius.delta0));
  }
  return ursell_derivative(s.u, v, s.beta, z, N_max);
}

}  // namespace boltzinv
