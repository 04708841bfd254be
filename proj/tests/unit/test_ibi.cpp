#include <cmath>
#include <random>

#include "boltzinv/errors.hpp"
#include "boltzinv/ibi.hpp"
#include "boltzinv/spaces.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace boltzinv;
using fixture::bump;

namespace {

double reference_z(double fraction) { return fraction * fixture::reference_setup().window.z_max_gas; }

struct Synthetic {
  ForwardResult fwd;
  LogRdf target;
};

const Synthetic& synthetic() {
  static const Synthetic s = [] {
    const auto& su = fixture::reference_setup();
    Synthetic out;
    out.fwd = rdf_expansion(su.u, su.beta, reference_z(0.25), 3);
    out.target = LogRdf::from_forward(out.fwd, su.u, su.beta);
    return out;
  }();
  return s;
}

IBIConfig reference_config() {
  IBIConfig cfg;
  cfg.beta = fixture::kReferenceBeta;
  cfg.z = reference_z(0.25);
  return cfg;
}

// Positive g with a few bins below the floor, for data-form targets.
RadialFunction random_rdf(const GridPtr& grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0.2, 2.5);
  Eigen::ArrayXd g(grid->size());
  for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = (*grid)[i] < 0.5 ? 1e-12 : U(rng);
  return RadialFunction(grid, g, 0.0);
}

}  // namespace

TEST_CASE("log RDF from plain data masks bins below the floor and missing bins") {
  auto grid = make_grid(RadialGrid::uniform(0.1, 1.0));
  Eigen::ArrayXd g(10);
  g << 0.0, 1e-9, 1e-8, 0.5, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0;
  std::vector<bool> missing(10, false);
  missing[7] = true;
  const LogRdf l = LogRdf::from_g(RadialFunction(grid, g, 0.0), 1e-8, missing);
  const std::vector<bool> expect = {false, false, false, true, true, true, true, false, true, true};
  CHECK(l.mask == expect);
  CHECK(l.log_g()[3] == doctest::Approx(std::log(0.5)));
  CHECK(l.log_g()[6] == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(LogRdf::from_g(RadialFunction(grid, g, 0.0), 1e-8, std::vector<bool>(3, false)), InputError);
}

TEST_CASE("potential of mean force of dilute data reproduces the potential") {
  const auto& s = fixture::reference_setup();
  const RadialFunction g = s.u.with_values((-s.beta * s.u.values).exp());
  const LogRdf target = LogRdf::from_g(g);
  const RadialFunction u0 = pmf_initial_guess(target, s.beta, s.params());
  int checked = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (!target.mask[i]) {
      CHECK(u0[i] > 0.0);
      continue;
    }
    CHECK(std::abs(u0[i] - s.u[i]) <= 1e-12 + 1e-9 * std::abs(s.u[i]));
    ++checked;
  }
  CHECK(checked > g.size() / 2);
}

TEST_CASE("potential of mean force of a flat RDF has no core and fails certification") {
  const auto& s = fixture::reference_setup();
  const LogRdf target = LogRdf::from_g(RadialFunction(s.grid, Eigen::ArrayXd::Ones(s.grid->size()), 0.0));
  CHECK_THROWS_AS(pmf_initial_guess(target, s.beta, s.params()), DomainError);
}

TEST_CASE("potential of mean force gap equals the cavity term") {
  const auto& s = fixture::reference_setup();
  const auto& syn = synthetic();
  const RadialFunction u0 = pmf_initial_guess(syn.target, s.beta, s.params());
  const RadialFunction gap = s.u.with_values(syn.fwd.log_y.values / s.beta);
  const double direct = norm_vu(u0 - s.u, s.u, s.params().r0, s.alpha());
  const double cavity = norm_vu(gap, s.u, s.params().r0, s.alpha());
  CHECK(direct == doctest::Approx(cavity).epsilon(1e-9));
  CHECK(std::isfinite(direct));
  // Frozen value for the reference potential at z = z_max_gas / 4.
  CHECK(direct == doctest::Approx(0.48796565542).epsilon(1e-6));
}

TEST_CASE("IBI step at the fixed point is bit-identical") {
  const auto& s = fixture::reference_setup();
  const auto& syn = synthetic();
  const RadialFunction next = ibi_step(s.u, syn.target, syn.target, 1.0 / s.beta, s.alpha());
  for (Eigen::Index i = 0; i < next.size(); ++i) REQUIRE(next[i] == s.u[i]);

  std::mt19937_64 rng(31);
  const RadialFunction g = random_rdf(s.grid, rng);
  const LogRdf data = LogRdf::from_g(g);
  const RadialFunction step = ibi_step(s.u, data, data, 3.0, s.alpha());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (data.mask[i]) REQUIRE(step[i] == s.u[i]);
}

TEST_CASE("IBI step increment is gamma times the log ratio") {
  const auto& s = fixture::reference_setup();
  std::mt19937_64 rng(32);
  const RadialFunction g = random_rdf(s.grid, rng);
  Eigen::ArrayXd gk = g.values;
  const Eigen::Index bin = s.grid->locate(1.5);
  gk[bin] *= std::exp(1.0);
  const RadialFunction next = ibi_step(s.u, LogRdf::from_g(g.with_values(gk)), LogRdf::from_g(g), 1.0, s.alpha());
  CHECK(next[bin] - s.u[bin] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(next[bin + 1] == s.u[bin + 1]);
}

TEST_CASE("IBI step raises the potential where the model is over-structured") {
  const auto& s = fixture::reference_setup();
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::mt19937_64 rng(seed);
    const RadialFunction gt = random_rdf(s.grid, rng);
    const RadialFunction gk = random_rdf(s.grid, rng);
    const LogRdf lt = LogRdf::from_g(gt), lk = LogRdf::from_g(gk);
    const double gamma = std::uniform_real_distribution<double>(0.1, 20.0)(rng);
    const RadialFunction next = ibi_step(s.u, lk, lt, gamma, s.alpha());
    for (Eigen::Index i = 0; i < gt.size(); ++i) {
      if (!lt.mask[i]) continue;
      if (gk[i] > gt[i]) REQUIRE(next[i] > s.u[i]);
      if (gk[i] < gt[i]) REQUIRE(next[i] < s.u[i]);
    }
  }
}

TEST_CASE("IBI step continues the core where data is unusable") {
  const auto& s = fixture::reference_setup();
  std::mt19937_64 rng(33);
  const LogRdf data = LogRdf::from_g(random_rdf(s.grid, rng));
  const RadialFunction next = ibi_step(s.u, data, data, 1.0, s.alpha());
  Eigen::Index b = 0;
  while (!data.mask[b]) ++b;
  REQUIRE(b > 0);
  for (Eigen::Index i = 0; i < b; ++i)
    CHECK(next[i] == doctest::Approx(s.u[b] * std::pow((*s.grid)[b] / (*s.grid)[i], s.alpha())));
}

TEST_CASE("IBI step rejects non-finite log ratios") {
  const auto& s = fixture::reference_setup();
  LogRdf a = synthetic().target;
  Eigen::ArrayXd e = a.exponent.values;
  e[100] = std::numeric_limits<double>::infinity();
  a.exponent = a.exponent.with_values(e);
  CHECK_THROWS_AS(ibi_step(s.u, a, synthetic().target, 1.0, s.alpha()), DomainError);
}

TEST_CASE("IBI started at the true potential stops at iteration 0") {
  const auto& s = fixture::reference_setup();
  const IBITrace t = run_ibi(s.u, synthetic().target, reference_config(), s.params(), s.u);
  REQUIRE(t.iterates.size() == 1);
  CHECK(t.residuals[0] == 0.0);
  CHECK(t.errors[0] == 0.0);
  CHECK(t.converged);
  CHECK(t.certified);
}

TEST_CASE("IBI with zero relaxation keeps iterates and residual constant") {
  const auto& s = fixture::reference_setup();
  const auto& syn = synthetic();
  IBIConfig cfg = reference_config();
  cfg.gamma = 0.0;
  cfg.max_iters = 3;
  const RadialFunction u0 = pmf_initial_guess(syn.target, s.beta, s.params());
  const IBITrace t = run_ibi(u0, syn.target, cfg, s.params());
  REQUIRE(t.iterates.size() == 4);
  for (std::size_t k = 1; k < t.iterates.size(); ++k) {
    CHECK((t.iterates[k].values == u0.values).all());
    CHECK(t.residuals[k] == t.residuals[0]);
  }
  CHECK_FALSE(t.converged);
}

TEST_CASE("IBI first residual matches an independent log ratio") {
  const auto& s = fixture::reference_setup();
  const auto& syn = synthetic();
  IBIConfig cfg = reference_config();
  cfg.max_iters = 0;
  const RadialFunction u0 = pmf_initial_guess(syn.target, s.beta, s.params());
  const IBITrace t = run_ibi(u0, syn.target, cfg, s.params());
  const ForwardResult f0 = rdf_expansion(u0, s.beta, cfg.z, 3);
  double sup = 0.0;
  for (Eigen::Index i = 0; i < u0.size(); ++i) {
    const double r = (*s.grid)[i];
    // Deep in the core g underflows and u0, u differ only by rounding of
    // the huge core values; those bins carry no information.
    if (!(f0.g[i] > 1e-200 && syn.fwd.g[i] > 1e-200)) continue;
    sup = std::max(sup, rho_weight(r, s.alpha()) * std::abs(std::log(f0.g[i] / syn.fwd.g[i])));
  }
    // The direct ratio of two g values near 1 loses digits at large r.
  CHECK(t.residuals[0] == doctest::Approx(sup).epsilon(1e-4));
}

TEST_CASE("IBI recovers a synthetic potential from its potential of mean force") {
  const auto& s = fixture::reference_setup();
  const auto& syn = synthetic();
  const RadialFunction u0 = pmf_initial_guess(syn.target, s.beta, s.params());
  const IBITrace t = run_ibi(u0, syn.target, reference_config(), s.params(), s.u);
  REQUIRE(t.certified);
  REQUIRE(t.residuals.size() >= 2);
  CHECK(t.residuals.back() <= t.residuals.front() / 10.0);
  CHECK(t.converged);
  for (std::size_t k = 1; k < std::min<std::size_t>(t.errors.size(), 6); ++k) CHECK(t.errors[k] <= t.errors[k - 1]);
  CHECK(t.errors.back() < 1e-6 * t.errors.front());
}

TEST_CASE("IBI reports a forward failure instead of throwing") {
  const auto& s = fixture::reference_setup();
  IBIConfig cfg = reference_config();
  cfg.z = 50.0;
  const IBITrace t = run_ibi(s.u, synthetic().target, cfg, s.params());
  CHECK(t.iterates.empty());
  CHECK_FALSE(t.converged);
  CHECK(t.stop_reason.find("forward model failed") != std::string::npos);
}

TEST_CASE("IBI rejects an uncertified start") {
  const auto& s = fixture::reference_setup();
  const IBITrace t = run_ibi(RadialFunction::zero(s.grid, s.alpha()), synthetic().target, reference_config(), s.params());
  CHECK_FALSE(t.certified);
  CHECK(t.iterates.empty());
}

TEST_CASE("GCMC backend requires the histogram grid") {
  const auto& s = fixture::reference_setup();
  IBIConfig cfg = reference_config();
  cfg.backend = ForwardBackend::gcmc;
  CHECK_THROWS_AS(forward_log_rdf(s.u, cfg, s.params()), InputError);
}

TEST_CASE("Phi derivative is linear and vanishes at v = 0") {
  const auto& s = fixture::reference_setup();
  const double z = reference_z(0.25), gamma = 1.0 / s.beta;
  const double m = 0.2 * s.radius.delta0;
  const RadialFunction v1 = bump(s, m, 0.3), v2 = bump(s, m, 1.9);
  const RadialFunction d1 = phi_derivative(s.u, v1, s.beta, z, gamma);
  const RadialFunction d2 = phi_derivative(s.u, v2, s.beta, z, gamma);
  const RadialFunction d12 = phi_derivative(s.u, 0.8 * v1 - 0.5 * v2, s.beta, z, gamma);
  const RadialFunction lin = 0.8 * d1 - 0.5 * d2;
  CHECK(norm_linf_rho(d12 - lin, s.alpha()) <= 1e-8 * norm_linf_rho(lin, s.alpha()));
  const RadialFunction d0 = phi_derivative(s.u, 0.0 * v1, s.beta, z, gamma);
  CHECK((d0.values == 0.0).all());
}

TEST_CASE("Phi derivative cancels in the dilute limit when gamma = 1/beta") {
  const auto& s = fixture::reference_setup();
  const RadialFunction v = bump(s, 0.2 * s.radius.delta0);
  std::vector<double> zs, norms;
  for (double frac : {0.1, 0.01, 0.001}) {
    zs.push_back(reference_z(frac));
    norms.push_back(norm_linf_rho(phi_derivative(s.u, v, s.beta, zs.back(), 1.0 / s.beta), s.alpha()));
  }
  CHECK(norms[2] < norms[1]);
  CHECK(norms[1] < norms[0]);
  CHECK(fixture::loglog_slope(zs, norms) == doctest::Approx(1.0).epsilon(0.05));
  const RadialFunction d2 = phi_derivative(s.u, v, s.beta, reference_z(0.25), 1.0 / s.beta, 2);
  CHECK((d2.values == 0.0).all());
}

TEST_CASE("Phi difference agrees with direct subtraction of cavity logs") {
  const auto& s = fixture::reference_setup();
  const double z = reference_z(0.25), gamma = 1.0 / s.beta;
  const RadialFunction v = bump(s, 0.1 * s.radius.delta0, 0.7);
  const RadialFunction d = phi_difference(s.u, v, s.beta, z, gamma);
  const ForwardResult a = rdf_expansion(s.u, s.beta, z, 3), b = rdf_expansion(s.u + v, s.beta, z, 3);
  const RadialFunction direct = v.with_values((1.0 - gamma * s.beta) * v.values + gamma * (b.log_y.values - a.log_y.values));
  CHECK((d.values - direct.values).abs().maxCoeff() <= 1e-8 * d.values.abs().maxCoeff());
  CHECK_THROWS_AS(phi_difference(s.u, v, s.beta, z, gamma, 4), InputError);
}

TEST_CASE("Lipschitz probe shows first-order differences and second-order remainders") {
  const auto& s = fixture::reference_setup();
  const double z = reference_z(0.25);
  for (double gamma : {1.0 / s.beta, 3.0}) {
    ProbeOptions opt;
    opt.n_samples = 2;
    const ProbeReport rep =
        lipschitz_probe(s.u, s.params().r0, s.alpha(), s.beta, z, gamma, 0.1 * s.radius.delta0, opt);
    REQUIRE(rep.levels.size() == 3);
    CHECK(rep.rem_slope == doctest::Approx(2.0).epsilon(0.05));
    CHECK(rep.diff_slope == doctest::Approx(1.0).epsilon(0.05));
    CHECK(rep.rem_slope_rho == doctest::Approx(2.0).epsilon(0.05));
    CHECK(rep.diff_slope_rho == doctest::Approx(1.0).epsilon(0.05));
    for (const auto& L : rep.levels) CHECK(std::isfinite(L.diff_ratio));
  }
}

TEST_CASE("Lipschitz ratio in the weighted sup norm vanishes with the activity") {
  const auto& s = fixture::reference_setup();
  ProbeOptions opt;
  opt.n_samples = 2;
  opt.halvings = 1;
  std::vector<double> ratios;
  for (double frac : {0.1, 0.05, 0.025}) {
    const ProbeReport rep = lipschitz_probe(s.u, s.params().r0, s.alpha(), s.beta, reference_z(frac), 1.0 / s.beta,
                                            0.1 * s.radius.delta0, opt);
    ratios.push_back(rep.levels.front().diff_ratio_rho);
  }
  CHECK(ratios[1] < ratios[0]);
  CHECK(ratios[2] < ratios[1]);
  CHECK(ratios[2] < 0.6 * ratios[0]);
}

TEST_CASE("random directions have the requested norm and are reproducible") {
  const auto& s = fixture::reference_setup();
  const RadialFunction a = random_direction(s.u, s.params().r0, s.alpha(), 0.01, 5);
  const RadialFunction b = random_direction(s.u, s.params().r0, s.alpha(), 0.01, 5);
  CHECK(norm_vu(a, s.u, s.params().r0, s.alpha()) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK((a.values == b.values).all());
}
