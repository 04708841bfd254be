#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "boltzinv");
  args.push_back("--log-level=quiet");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = boltzinv::cli::dispatch(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str()};
}

fs::path workdir() {
  static const fs::path p = [] {
    const fs::path d = fs::temp_directory_path() / "boltzinv_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    std::ofstream(d / "lj.json")
        << R"({"form": "lennard_jones", "epsilon": 1, "sigma": 1, "params": {"alpha": 6, "r0": 0.9, "c0": 0.1, "C0": 100}})";
    std::ofstream(d / "gcmc.json") << R"({"n_sample": 4000, "n_equilibrate": 1000, "n_chains": 2, "box_side": 10})";
    return d;
  }();
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string at(const std::string& name) { return (workdir() / name).string(); }

}  // namespace

TEST_CASE("graphs subcommand prints the counts") {
  const Run r = run({"graphs", "--n", "4"});
  CHECK(r.code == 0);
  CHECK(r.out == "connected: 38, trees: 16\n");
  const Run l = run({"graphs", "--n", "3", "--list", "--out", at("graphs3")});
  CHECK(l.out.find("1: 2 3; 2: 1 3; 3: 1 2") != std::string::npos);
  CHECK(fs::exists(workdir() / "graphs3" / "manifest.json"));
  CHECK(fs::exists(workdir() / "graphs3" / "graphs.json"));
  CHECK(run({"graphs", "--n", "9"}).code == 2);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"forward", "--beta", "1", "--out", at("x")}).code == 2);
  CHECK(run({"forward", "--potential", at("missing.json"), "--beta", "1", "--out", at("x")}).code == 2);
  CHECK(run({"forward", "--potential", at("lj.json"), "--beta", "1", "--z", "lots", "--out", at("x")}).code == 2);
  CHECK(run({"invert", "--beta", "1", "--out", at("x")}).code == 2);
  CHECK_FALSE(fs::exists(workdir() / "x"));
}

TEST_CASE("domain errors exit with code 1") {
  // Activity far outside the gas-phase window.
  CHECK(run({"forward", "--potential", at("lj.json"), "--beta", "0.1", "--z", "1", "--out", at("outside")}).code == 1);
  CHECK_FALSE(fs::exists(workdir() / "outside"));
}

TEST_CASE("forward runs write manifest and data and are deterministic") {
  const auto args = [](const std::string& out) {
    return std::vector<std::string>{"forward", "--potential", at("lj.json"), "--beta", "0.1", "--out", at(out)};
  };
  REQUIRE(run(args("fwd_a")).code == 0);
  REQUIRE(run(args("fwd_b")).code == 0);
  for (const char* f : {"g.csv", "y.csv", "manifest.json", "diagnostics.json"}) CHECK(fs::exists(workdir() / "fwd_a" / f));
  CHECK(slurp(workdir() / "fwd_a" / "g.csv") == slurp(workdir() / "fwd_b" / "g.csv"));
  CHECK(slurp(workdir() / "fwd_a" / "manifest.json") == slurp(workdir() / "fwd_b" / "manifest.json"));
  const auto m = nlohmann::json::parse(slurp(workdir() / "fwd_a" / "manifest.json"));
  CHECK(m["subcommand"] == "forward");
  CHECK(m["config"]["z_arg"] == "auto");
  CHECK(m["config"]["z"].get<double>() > 0.0);
  // An existing directory is only replaced on request.
  CHECK(run(args("fwd_a")).code == 2);
  auto again = args("fwd_a");
  again.push_back("--overwrite");
  CHECK(run(again).code == 0);
}

TEST_CASE("simulate is reproducible for a fixed seed") {
  const auto args = [](const std::string& out, const std::string& seed) {
    return std::vector<std::string>{"simulate", "--potential", at("lj.json"), "--beta", "0.1", "--config",
                                    at("gcmc.json"), "--seed", seed, "--out", at(out)};
  };
  REQUIRE(run(args("sim_a", "5")).code == 0);
  REQUIRE(run(args("sim_b", "5")).code == 0);
  REQUIRE(run(args("sim_c", "6")).code == 0);
  for (const char* f : {"g.csv", "y.csv", "N_hist.csv"}) {
    CHECK(slurp(workdir() / "sim_a" / f) == slurp(workdir() / "sim_b" / f));
  }
  CHECK(slurp(workdir() / "sim_a" / "g.csv") != slurp(workdir() / "sim_c" / "g.csv"));
  CHECK(slurp(workdir() / "sim_a" / "g.csv").rfind("r,g,stderr,missing\n", 0) == 0);
}

TEST_CASE("invert recovers a synthetic potential and writes its trace") {
  REQUIRE(run({"invert", "--synthetic", at("lj.json"), "--beta", "0.1", "--out", at("inv")}).code == 0);
  const auto t = nlohmann::json::parse(slurp(workdir() / "inv" / "trace.json"));
  CHECK(t["converged"] == true);
  CHECK(t["certified"] == true);
  const auto n = t["residuals"].size();
  CHECK(n == t["errors"].size());
  for (std::size_t k = 0; k < n; ++k) CHECK(fs::exists(workdir() / "inv" / ("u_" + std::to_string(k) + ".csv")));
}

TEST_CASE("invert from an uncertified start exits with code 1") {
  std::ofstream(workdir() / "flat.json")
      << R"({"form": "zero", "params": {"alpha": 6, "r0": 0.9, "c0": 0.1, "C0": 100}})";
  const Run r = run({"invert", "--synthetic", at("lj.json"), "--u0", at("flat.json"), "--beta", "0.1", "--out",
                     at("inv_flat")});
  CHECK(r.code == 1);
  const auto t = nlohmann::json::parse(slurp(workdir() / "inv_flat" / "trace.json"));
  CHECK(t["certified"] == false);
}
