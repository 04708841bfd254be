#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <optional>
#include <unistd.h>

#include "boltzinv/cluster.hpp"
#include "boltzinv/convolution.hpp"
#include "boltzinv/errors.hpp"
#include "boltzinv/forward.hpp"
#include "boltzinv/gcmc.hpp"
#include "boltzinv/graphs.hpp"
#include "boltzinv/ibi.hpp"
#include "boltzinv/io.hpp"
#include "boltzinv/parallel.hpp"
#include "boltzinv/spaces.hpp"

namespace boltzinv::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

enum class LogLevel { quiet, info, debug };

struct Common {
  std::string out;
  std::uint64_t seed = 1;
  std::string log_level = "info";
  int threads = 0;
  bool overwrite = false;

  LogLevel level() const {
    if (log_level == "quiet") return LogLevel::quiet;
    if (log_level == "debug") return LogLevel::debug;
    return LogLevel::info;
  }
};

void log(const Common& c, const std::string& msg) {
  if (c.level() != LogLevel::quiet) std::cerr << msg << '\n';
}

// Files are written into a hidden sibling directory that is renamed into
// place once the run has finished.
class OutputDir {
 public:
  OutputDir(const std::string& target, bool overwrite) : target_(target) {
    if (target_.empty()) throw InputError("--out is required");
    if (fs::exists(target_) && !fs::is_empty(target_) && !overwrite) {
      throw InputError("output directory " + target_.string() + " exists and is not empty (use --overwrite)");
    }
    const fs::path parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
    fs::create_directories(parent);
    staging_ = parent / fmt::format(".{}.tmp-{}", target_.filename().string(), ::getpid());
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~OutputDir() {
    std::error_code ec;
    if (!committed_) fs::remove_all(staging_, ec);
  }
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  fs::path operator/(const std::string& name) const { return staging_ / name; }

  void commit() {
    fs::remove_all(target_);
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

json manifest(const std::string& subcommand, const Common& c, json config) {
  return {{"program", "boltzinv"},
          {"version", kVersion},
          {"subcommand", subcommand},
          {"seed", c.seed},
          {"threads", thread_count()},
          {"config", std::move(config)}};
}

GridPtr grid_for(const Potential& u) {
  if (const auto* t = std::get_if<TabulatedPotential>(&u.form())) {
    const auto& g = *t->table.grid;
    if (g.r_max() >= 10.0 * u.params().r0) return t->table.grid;
  }
  return default_grid(u.params());
}

double resolve_z(const std::string& text, const ModelSetup& s) {
  if (text == "auto") return 0.25 * s.window.z_max_gas;
  std::size_t used = 0;
  double z = 0.0;
  try {
    z = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(z >= 0.0)) throw InputError("--z must be 'auto' or a non-negative number, got " + text);
  return z;
}

void add_common(CLI::App* sub, Common& c, bool out_required = true) {
  auto* o = sub->add_option("--out", c.out, "output directory");
  if (out_required) o->required();
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("--log-level", c.log_level, "quiet, info or debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  sub->add_option("--threads", c.threads, "worker threads (default: BOLTZINV_THREADS or all cores)");
  sub->add_flag("--overwrite", c.overwrite, "replace an existing output directory");
}

json certification_json(const CertificationReport& r) {
  return {{"pass", r.pass},        {"core_pass", r.core_pass}, {"tail_pass", r.tail_pass}, {"c", io::json_number(r.c)},
          {"C", io::json_number(r.C)}, {"message", r.message}};
}

json forward_diagnostics(const ModelSetup& s, double z, const ForwardResult& r) {
  json d = {{"backend", r.backend},
            {"order", r.order},
            {"rho0", r.rho0},
            {"ensemble", io::to_json(s.ensemble(z))},
            {"potential", io::to_json(s.potential)},
            {"c_rho", s.c_rho},
            {"delta0", s.radius.delta0}};
  const EnsembleParams e = s.ensemble(z);
  if (z <= e.z_max_strict) d["cavity_lower_bound"] = to_json(cavity_lower_bound_check(r, e));
  return d;
}

// ---------------------------------------------------------------- forward

struct ForwardArgs {
  std::string potential;
  double beta = 1.0;
  std::string z = "auto";
  std::string backend = "expansion";
  int order = 3;
  bool force = false;
  std::string gcmc_config;
};

void write_gcmc_outputs(OutputDir& dir, const GCMCResult& res, const Potential& u, double beta) {
  Eigen::ArrayXd missing(res.g.size());
  for (Eigen::Index i = 0; i < missing.size(); ++i) missing[i] = res.missing[i] ? 1.0 : 0.0;
  io::write_csv(dir / "g.csv", res.g, "g", {{"stderr", res.g_stderr}, {"missing", missing}});
  io::write_json(io::sidecar_path(dir / "g.csv"),
                 {{"alpha", u.params().alpha}, {"tail_exponent", 0.0}, {"r_max", res.g.grid->r_max()}});
  const CavityEstimate y = estimate_cavity(res, u, beta);
  io::write_csv(dir / "y.csv", y.y, "y", {{"stderr", y.stderr_}, {"missing", missing}});
  std::ofstream nh(dir / "N_hist.csv");
  nh << "N,count\n";
  for (std::size_t n = 0; n < res.N_histogram.size(); ++n) nh << n << ',' << res.N_histogram[n] << '\n';
}

json gcmc_json(const GCMCResult& res) {
  return {{"config", io::to_json(res.config)},
          {"rho0_mean", res.rho0_mean},
          {"rho0_err", res.rho0_err},
          {"mean_N", res.mean_N},
          {"var_N", res.var_N},
          {"samples", res.samples},
          {"acceptance",
           {{"insert", res.acceptance.insert}, {"remove", res.acceptance.remove}, {"displace", res.acceptance.displace}}},
          {"warnings", res.warnings}};
}

GCMCConfig gcmc_config(const std::string& path, double beta, double z, std::uint64_t seed) {
  GCMCConfig cfg = path.empty() ? GCMCConfig{} : io::gcmc_config_from_json(io::read_json(path));
  cfg.beta = beta;
  cfg.z = z;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

int run_forward(const ForwardArgs& a, const Common& c) {
  const Potential u = io::read_potential(a.potential);
  OutputDir dir(c.out, c.overwrite);
  const ModelSetup s = make_setup(u, a.beta, grid_for(u));
  const double z = resolve_z(a.z, s);
  json config = {{"potential", a.potential}, {"beta", a.beta}, {"z", z}, {"z_arg", a.z},
                 {"backend", a.backend},     {"order", a.order}, {"force", a.force}};
  json diag;
  if (a.backend == "expansion") {
    log(c, fmt::format("expansion backend, order {}, z = {:.6g}", a.order, z));
    const ForwardResult r = rdf_expansion(s, z, a.order, a.force);
    io::write_radial_function(dir / "g.csv", r.g, s.alpha(), "g");
    io::write_radial_function(dir / "y.csv", r.y, s.alpha(), "y");
    diag = forward_diagnostics(s, z, r);
  } else {
    const GCMCConfig cfg = gcmc_config(a.gcmc_config, a.beta, z, c.seed);
    config["gcmc"] = io::to_json(cfg);
    log(c, fmt::format("GCMC backend, {} chains, z = {:.6g}", cfg.n_chains, z));
    const GCMCResult res = run_gcmc(s, cfg);
    for (const auto& w : res.warnings) log(c, "warning: " + w);
    write_gcmc_outputs(dir, res, u, a.beta);
    diag = forward_diagnostics(s, z, gcmc_forward_result(res, u, a.beta));
    diag["gcmc"] = gcmc_json(res);
  }
  io::write_json(dir / "diagnostics.json", diag);
  io::write_json(dir / "manifest.json", manifest("forward", c, config));
  dir.commit();
  return 0;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string potential;
  double beta = 1.0;
  std::string z = "auto";
  std::string config;
};

int run_simulate(const SimulateArgs& a, const Common& c) {
  const Potential u = io::read_potential(a.potential);
  OutputDir dir(c.out, c.overwrite);
  const ModelSetup s = make_setup(u, a.beta, grid_for(u));
  const double z = resolve_z(a.z, s);
  const GCMCConfig cfg = gcmc_config(a.config, a.beta, z, c.seed);
  log(c, fmt::format("GCMC: {} chains x {} moves, z = {:.6g}", cfg.n_chains, cfg.n_sample, z));
  const GCMCResult res = run_gcmc(s, cfg);
  for (const auto& w : res.warnings) log(c, "warning: " + w);
  write_gcmc_outputs(dir, res, u, a.beta);
  json diag = gcmc_json(res);
  diag["ensemble"] = io::to_json(s.ensemble(z));
  io::write_json(dir / "diagnostics.json", diag);
  io::write_json(dir / "manifest.json",
                 manifest("simulate", c, {{"potential", a.potential}, {"beta", a.beta}, {"z", z}, {"z_arg", a.z},
                                          {"gcmc", io::to_json(cfg)}}));
  dir.commit();
  return 0;
}

// ---------------------------------------------------------------- invert

struct InvertArgs {
  std::string gdagger;
  std::string synthetic;
  std::string u0 = "pmf";
  std::string gamma = "1/beta";
  std::string backend = "expansion";
  int max_iters = 20;
  double tol = 1e-10;
  double beta = 1.0;
  std::string z = "auto";
  std::string params;
  std::string gcmc_config;
  double floor = 1e-8;
};

int run_invert(const InvertArgs& a, const Common& c) {
  if (a.gdagger.empty() == a.synthetic.empty()) throw InputError("give exactly one of --gdagger and --synthetic");
  IBIConfig cfg;
  cfg.beta = a.beta;
  cfg.max_iters = a.max_iters;
  cfg.residual_tol = a.tol;
  cfg.floor = a.floor;
  cfg.backend = a.backend == "gcmc" ? ForwardBackend::gcmc : ForwardBackend::expansion;
  if (a.gamma != "1/beta") {
    try {
      cfg.gamma = std::stod(a.gamma);
    } catch (const std::exception&) {
      throw InputError("--gamma must be a number or '1/beta'");
    }
  }

  LogRdf target;
  LJTypeParams params;
  std::optional<RadialFunction> u_true;
  std::optional<ModelSetup> setup;
  if (!a.synthetic.empty()) {
    const Potential ut = io::read_potential(a.synthetic);
    params = ut.params();
    setup = make_setup(ut, a.beta, grid_for(ut));
    cfg.z = resolve_z(a.z, *setup);
    target = LogRdf::from_forward(rdf_expansion(*setup, cfg.z, cfg.N_max), setup->u, a.beta);
    u_true = setup->u;
  } else {
    const io::RadialTable g = io::read_radial_function(a.gdagger, 0.0);
    if (!a.params.empty()) {
      params = io::params_from_json(io::read_json(a.params));
    } else if (g.has_sidecar && g.sidecar.contains("params")) {
      params = io::params_from_json(g.sidecar["params"]);
    } else {
      throw InputError("--params is required with --gdagger");
    }
    std::vector<bool> missing;
    if (g.has_sidecar && g.sidecar.contains("missing")) missing = g.sidecar["missing"].get<std::vector<bool>>();
    target = LogRdf::from_g(g.f, a.floor, missing);
  }

  RadialFunction u0;
  if (a.u0 == "pmf") {
    u0 = pmf_initial_guess(target, a.beta, params);
  } else {
    const Potential p = io::read_potential(a.u0);
    const auto* t = std::get_if<TabulatedPotential>(&p.form());
    u0 = t && t->table.compatible(target.exponent) ? t->table : p.sample(target.grid());
  }
  if (!setup) {
    setup = make_setup(Potential::tabulated(u0, params), a.beta, target.grid());
    cfg.z = resolve_z(a.z, *setup);
  }
  if (cfg.backend == ForwardBackend::gcmc) {
    cfg.gcmc = gcmc_config(a.gcmc_config, a.beta, cfg.z, c.seed);
  }

  OutputDir dir(c.out, c.overwrite);
  log(c, fmt::format("IBI: gamma = {:.6g}, z = {:.6g}, up to {} iterations", cfg.resolved_gamma(), cfg.z, cfg.max_iters));
  const IBITrace t = run_ibi(u0, target, cfg, params, u_true);
  for (std::size_t k = 0; k < t.iterates.size(); ++k) {
    io::write_potential_csv(dir / fmt::format("u_{}.csv", k), t.iterates[k], params);
    log(c, fmt::format("  iteration {}: residual {:.6e}", k, t.residuals[k]));
  }
  json trace = {{"residuals", json::array()},
                {"errors", json::array()},
                {"certified_each", t.certified_each},
                {"certified", t.certified},
                {"converged", t.converged},
                {"stop_reason", t.stop_reason},
                {"gamma", cfg.resolved_gamma()},
                {"z", cfg.z}};
  for (double r : t.residuals) trace["residuals"].push_back(io::json_number(r));
  for (double e : t.errors) trace["errors"].push_back(io::json_number(e));
  if (!t.certified) trace["failure"] = certification_json(t.failure);
  io::write_json(dir / "trace.json", trace);
  io::write_json(dir / "manifest.json",
                 manifest("invert", c,
                          {{"gdagger", a.gdagger},
                           {"synthetic", a.synthetic},
                           {"u0", a.u0},
                           {"gamma", cfg.resolved_gamma()},
                           {"backend", a.backend},
                           {"max_iters", a.max_iters},
                           {"tol", a.tol},
                           {"beta", a.beta},
                           {"z", cfg.z},
                           {"z_arg", a.z},
                           {"floor", a.floor},
                           {"params", io::to_json(params)}}));
  dir.commit();
  log(c, t.stop_reason);
  return t.certified ? 0 : 1;
}

// ---------------------------------------------------------------- verify-bounds

struct VerifyArgs {
  std::string potential;
  double beta = 1.0;
  std::string z = "auto";
  std::uint64_t mc_budget = 100000;
};

InequalityReport failed(const std::string& name, const std::string& why) {
  return InequalityReport::make(name, std::nan(""), std::nan(""), false, why);
}

int run_verify(const VerifyArgs& a, const Common& c) {
  const Potential u = io::read_potential(a.potential);
  OutputDir dir(c.out, c.overwrite);
  const ModelSetup s = make_setup(u, a.beta, grid_for(u));
  const double z = resolve_z(a.z, s);
  const EnsembleParams e = s.ensemble(z);
  const double alpha = s.alpha();
  std::vector<InequalityReport> checks;

  const CertificationReport cert = certify_lj_type(u, s.params(), *s.grid);
  checks.push_back(InequalityReport::make("lj_type_core", s.params().c0, cert.c, cert.core_pass));
  checks.push_back(InequalityReport::make("lj_type_tail", cert.C, s.params().C0, cert.tail_pass));
  checks.push_back(InequalityReport::make("mayer_l1_below_c_beta", s.mayer.l1, s.mayer.c_beta,
                                          s.mayer.l1 < s.mayer.c_beta));
  checks.push_back(InequalityReport::make("gas_phase_window", z, e.z_max_gas, e.in_gas_phase()));
  checks.push_back(InequalityReport::make("weight_l1_below_one", s.w.l1_norm(), 1.0, s.w.l1_norm() < 1.0));
  checks.push_back(check_banach_algebra(s.w, s.w, alpha));

  std::optional<RadialFunction> W;
  try {
    AutoconvolutionLadder ladder = build_ladder(s.w, 10, alpha);
    const GeometricDecayReport geo = check_geometric_decay(ladder);
    checks.insert(checks.end(), geo.levels.begin(), geo.levels.end());
    W = resolvent_W_sigma(s.w);
  } catch (const PreconditionError& ex) {
    checks.push_back(failed("geometric_decay", ex.what()));
  }

  if (W) {
    McOptions mc;
    mc.budget = a.mc_budget;
    mc.seed = c.seed;
    for (int N : {3, 4}) {
      const auto tg = check_tree_graph_bound(s, *W, N, {0.5, 1.0, 1.5, 2.5}, mc);
      checks.insert(checks.end(), tg.begin(), tg.end());
    }
    if (e.in_gas_phase()) {
      ExpansionOptions opt;
      opt.a4 = mc;
      const ClusterExpansion ex = ursell_truncated(s, z, 3, opt);
      const UrsellDecayReport d = check_ursell_decay(ex, s, *W);
      checks.push_back(d.finite);
      checks.push_back(d.envelope);
      checks.push_back(d.tail);
    } else {
      checks.push_back(failed("ursell_decay", "activity outside the gas-phase window"));
    }
  }

  if (z <= e.z_max_strict) {
    try {
      checks.push_back(cavity_lower_bound_check(rdf_expansion(s, z, 3), e));
    } catch (const DomainError& ex) {
      checks.push_back(failed("cavity_lower_bound", ex.what()));
    }
  } else {
    checks.push_back(InequalityReport::make("strict_activity_window", z, e.z_max_strict, false));
  }

  bool all = true;
  for (const auto& r : checks) all = all && r.pass;
  const json report = {{"ensemble", io::to_json(e)},
                       {"potential", io::to_json(u)},
                       {"B", s.B},
                       {"delta0", s.radius.delta0},
                       {"checks", to_json(checks)},
                       {"all_pass", all}};
  io::write_json(dir / "report.json", report);
  io::write_json(dir / "manifest.json",
                 manifest("verify-bounds", c,
                          {{"potential", a.potential}, {"beta", a.beta}, {"z", z}, {"z_arg", a.z}, {"mc_budget", a.mc_budget}}));
  dir.commit();
  std::cout << report.dump(2) << '\n';
  return all ? 0 : 1;
}

// ---------------------------------------------------------------- graphs

struct GraphArgs {
  int n = 4;
  bool list = false;
};

int run_graphs(const GraphArgs& a, const Common& c) {
  if (a.n < 2 || a.n > 6) throw InputError("--n must be between 2 and 6");
  std::optional<std::vector<LabeledGraph>> connected;
  if (a.n <= 5) connected = enumerate_connected_graphs(a.n);
  const auto trees = enumerate_trees(a.n);
  std::cout << "connected: " << (connected ? std::to_string(connected->size()) : std::string("n/a"))
            << ", trees: " << trees.size() << '\n';
  if (a.list) {
    if (connected) {
      std::cout << "connected graphs:\n";
      for (const auto& g : *connected) std::cout << "  " << g.adjacency() << '\n';
    }
    std::cout << "trees:\n";
    for (const auto& g : trees) std::cout << "  " << g.adjacency() << '\n';
  }
  if (!c.out.empty()) {
    OutputDir dir(c.out, c.overwrite);
    json j = {{"n", a.n}, {"trees", json::array()}};
    for (const auto& g : trees) j["trees"].push_back(g.adjacency());
    if (connected) {
      j["connected"] = json::array();
      for (const auto& g : *connected) j["connected"].push_back(g.adjacency());
    }
    io::write_json(dir / "graphs.json", j);
    io::write_json(dir / "manifest.json", manifest("graphs", c, {{"n", a.n}}));
    dir.commit();
  }
  return 0;
}

}  // namespace

int dispatch(int argc, char** argv) {
  CLI::App app{"Pair potentials from radial distribution functions: forward maps, simulation and inversion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  ForwardArgs fa;
  auto* fwd = app.add_subcommand("forward", "radial distribution function of a potential");
  fwd->add_option("--potential", fa.potential, "potential JSON or CSV")->required();
  fwd->add_option("--beta", fa.beta, "inverse temperature")->required()->check(CLI::PositiveNumber);
  fwd->add_option("--z", fa.z, "activity, or 'auto' for a quarter of the gas-phase limit");
  fwd->add_option("--backend", fa.backend)->check(CLI::IsMember({"expansion", "gcmc"}));
  fwd->add_option("--order", fa.order, "expansion order N_max")->check(CLI::IsMember({2, 3}));
  fwd->add_flag("--force", fa.force, "allow activities outside the gas-phase window");
  fwd->add_option("--gcmc-config", fa.gcmc_config, "GCMC settings (JSON)");
  add_common(fwd, common);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "grand canonical Monte Carlo");
  sim->add_option("--potential", sa.potential)->required();
  sim->add_option("--beta", sa.beta)->required()->check(CLI::PositiveNumber);
  sim->add_option("--z", sa.z);
  sim->add_option("--config", sa.config, "GCMC settings (JSON)");
  add_common(sim, common);

  InvertArgs ia;
  auto* inv = app.add_subcommand("invert", "iterative Boltzmann inversion");
  inv->add_option("--gdagger", ia.gdagger, "target g as CSV (r,value)");
  inv->add_option("--synthetic", ia.synthetic, "potential whose expansion g is the target");
  inv->add_option("--u0", ia.u0, "initial potential file, or 'pmf'");
  inv->add_option("--gamma", ia.gamma, "relaxation parameter, or '1/beta'");
  inv->add_option("--backend", ia.backend)->check(CLI::IsMember({"expansion", "gcmc"}));
  inv->add_option("--max-iters", ia.max_iters)->check(CLI::NonNegativeNumber);
  inv->add_option("--tol", ia.tol)->check(CLI::PositiveNumber);
  inv->add_option("--beta", ia.beta)->required()->check(CLI::PositiveNumber);
  inv->add_option("--z", ia.z);
  inv->add_option("--params", ia.params, "LJ-type class parameters (JSON)");
  inv->add_option("--gcmc-config", ia.gcmc_config);
  inv->add_option("--floor", ia.floor, "g values below this are excluded from the update");
  add_common(inv, common);

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify-bounds", "check the admissibility and cluster-expansion inequalities");
  ver->add_option("--potential", va.potential)->required();
  ver->add_option("--beta", va.beta)->required()->check(CLI::PositiveNumber);
  ver->add_option("--z", va.z);
  ver->add_option("--mc-budget", va.mc_budget, "Monte Carlo samples per radius");
  add_common(ver, common);

  GraphArgs ga;
  auto* gr = app.add_subcommand("graphs", "count connected labelled graphs and trees");
  gr->add_option("--n", ga.n, "number of vertices")->required();
  gr->add_flag("--list", ga.list, "print adjacency lists");
  add_common(gr, common, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (common.threads > 0) ::setenv("BOLTZINV_THREADS", std::to_string(common.threads).c_str(), 1);

  try {
    if (*fwd) return run_forward(fa, common);
    if (*sim) return run_simulate(sa, common);
    if (*inv) return run_invert(ia, common);
    if (*ver) return run_verify(va, common);
    if (*gr) return run_graphs(ga, common);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace boltzinv::cli
