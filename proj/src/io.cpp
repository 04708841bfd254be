#include "boltzinv/io.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

#include "boltzinv/errors.hpp"

namespace boltzinv::io {

fs::path sidecar_path(const fs::path& csv) { return fs::path(csv.string() + ".json"); }

std::string format_double(double x) { return fmt::format("{:.17g}", x); }

nlohmann::json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

double number_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw InputError("expected a number in JSON, got " + j.dump());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(fmt::format("malformed JSON in {}: {}", path.string(), e.what()));
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_csv(const fs::path& path, const RadialFunction& f, const std::string& value_column,
               const std::vector<std::pair<std::string, Eigen::ArrayXd>>& extra) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "r," << value_column;
  for (const auto& [name, col] : extra) {
    if (col.size() != f.size()) throw InputError("extra CSV column " + name + " has the wrong length");
    out << ',' << name;
  }
  out << '\n';
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    out << format_double(f.r(i)) << ',' << format_double(f[i]);
    for (const auto& [name, col] : extra) out << ',' << format_double(col[i]);
    out << '\n';
  }
}

void write_radial_function(const fs::path& path, const RadialFunction& f, double alpha,
                           const std::string& value_column) {
  write_csv(path, f, value_column);
  write_json(sidecar_path(path), {{"alpha", alpha},
                                  {"tail_exponent", json_number(f.tail_exponent)},
                                  {"r_max", f.grid->r_max()}});
}

namespace {

double parse_field(const std::string& s, const fs::path& path, int line) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0) throw InputError(fmt::format("{}:{}: not a number: '{}'", path.string(), line, s));
  return x;
}

}  // namespace

RadialTable read_radial_function(const fs::path& path, double default_tail, double default_alpha) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + " is empty");
  std::vector<double> r, v;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line == "\r") continue;
    std::stringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) {
      throw InputError(fmt::format("{}:{}: expected at least two columns", path.string(), n));
    }
    r.push_back(parse_field(a, path, n));
    v.push_back(parse_field(b, path, n));
  }
  if (r.empty()) throw InputError(path.string() + " has no data rows");
  RadialTable t;
  double tail = default_tail;
  t.alpha = default_alpha;
  const fs::path side = sidecar_path(path);
  if (fs::exists(side)) {
    t.has_sidecar = true;
    t.sidecar = read_json(side);
    if (t.sidecar.contains("tail_exponent")) tail = number_from_json(t.sidecar["tail_exponent"]);
    if (t.sidecar.contains("alpha")) t.alpha = number_from_json(t.sidecar["alpha"]);
  }
  Eigen::ArrayXd nodes = Eigen::Map<Eigen::ArrayXd>(r.data(), static_cast<Eigen::Index>(r.size()));
  Eigen::ArrayXd vals = Eigen::Map<Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  t.f = RadialFunction(make_grid(RadialGrid(std::move(nodes))), std::move(vals), tail);
  return t;
}

nlohmann::json to_json(const LJTypeParams& p) {
  nlohmann::json j = {{"alpha", p.alpha}, {"r0", p.r0}, {"c0", p.c0}, {"C0", p.C0}};
  if (!std::isnan(p.c)) j["c"] = p.c;
  if (!std::isnan(p.C)) j["C"] = p.C;
  return j;
}

LJTypeParams params_from_json(const nlohmann::json& j) {
  LJTypeParams p;
  if (!j.is_object()) throw InputError("LJ-type parameters must be a JSON object");
  if (j.contains("alpha")) p.alpha = number_from_json(j["alpha"]);
  if (j.contains("r0")) p.r0 = number_from_json(j["r0"]);
  if (j.contains("c0")) p.c0 = number_from_json(j["c0"]);
  if (j.contains("C0")) p.C0 = number_from_json(j["C0"]);
  if (j.contains("c")) p.c = number_from_json(j["c"]);
  if (j.contains("C")) p.C = number_from_json(j["C"]);
  p.validate();
  return p;
}

nlohmann::json to_json(const Potential& u) {
  nlohmann::json j;
  std::visit(
      [&](const auto& form) {
        using T = std::decay_t<decltype(form)>;
        if constexpr (std::is_same_v<T, LennardJones>) {
          j = {{"form", "lennard_jones"}, {"epsilon", form.epsilon}, {"sigma", form.sigma}};
        } else if constexpr (std::is_same_v<T, PowerLaw>) {
          j = {{"form", "power_law"}, {"amplitude", form.amplitude}, {"exponent", form.exponent}};
        } else if constexpr (std::is_same_v<T, ZeroPotential>) {
          j = {{"form", "zero"}};
        } else {
          j = {{"form", "tabulated"}, {"nodes", form.table.size()}, {"r_max", form.table.grid->r_max()}};
        }
      },
      u.form());
  j["params"] = to_json(u.params());
  return j;
}

Potential potential_from_json(const nlohmann::json& j, const fs::path& dir) {
  try {
    const LJTypeParams p = params_from_json(j.value("params", nlohmann::json::object()));
    const std::string form = j.at("form").get<std::string>();
    if (form == "lennard_jones") return Potential::lj(j.value("epsilon", 1.0), j.value("sigma", 1.0), p);
    if (form == "power_law") return Potential::power_law(j.at("amplitude").get<double>(), j.at("exponent").get<double>(), p);
    if (form == "zero") return Potential::zero(p);
    if (form == "tabulated") {
      const fs::path table = dir / j.at("table").get<std::string>();
      return Potential::tabulated(read_radial_function(table, p.alpha, p.alpha).f, p);
    }
    throw InputError("unknown potential form '" + form + "'");
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed potential description: ") + e.what());
  }
}

void write_potential_csv(const fs::path& path, const RadialFunction& u, const LJTypeParams& p) {
  write_csv(path, u, "u");
  write_json(sidecar_path(path), {{"alpha", p.alpha},
                                  {"tail_exponent", json_number(u.tail_exponent)},
                                  {"r_max", u.grid->r_max()},
                                  {"params", to_json(p)}});
}

Potential read_potential(const fs::path& path) {
  if (!fs::exists(path)) throw InputError("potential file not found: " + path.string());
  if (path.extension() == ".json") return potential_from_json(read_json(path), path.parent_path());
  const RadialTable t = read_radial_function(path);
  if (!t.has_sidecar || !t.sidecar.contains("params")) {
    throw InputError("tabulated potential " + path.string() + " needs a sidecar " + sidecar_path(path).string() +
                     " with LJ-type params");
  }
  const LJTypeParams p = params_from_json(t.sidecar["params"]);
  RadialFunction table = t.f;
  if (!t.sidecar.contains("tail_exponent")) table.tail_exponent = p.alpha;
  return Potential::tabulated(std::move(table), p);
}

nlohmann::json to_json(const EnsembleParams& e) {
  return {{"beta", e.beta},           {"z", e.z}, {"c_beta", e.c_beta}, {"B", e.B}, {"z_max_gas", e.z_max_gas},
          {"z_max_strict", e.z_max_strict}, {"in_gas_phase", e.in_gas_phase()}};
}

nlohmann::json to_json(const GCMCConfig& c) {
  return {{"box_side", c.box_side},
          {"beta", c.beta},
          {"z", c.z},
          {"mix", {{"insert", c.mix.insert}, {"remove", c.mix.remove}, {"displace", c.mix.displace}}},
          {"max_displacement", c.max_displacement},
          {"r_cut", c.r_cut},
          {"n_equilibrate", c.n_equilibrate},
          {"n_sample", c.n_sample},
          {"sample_interval", c.sample_interval},
          {"blocks_per_chain", c.blocks_per_chain},
          {"bin_width", c.bin_width},
          {"seed", c.seed},
          {"n_chains", c.n_chains}};
}

GCMCConfig gcmc_config_from_json(const nlohmann::json& j, GCMCConfig c) {
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("box_side", c.box_side);
    get("beta", c.beta);
    get("z", c.z);
    if (j.contains("mix")) {
      const auto& m = j["mix"];
      c.mix.insert = m.value("insert", c.mix.insert);
      c.mix.remove = m.value("remove", c.mix.remove);
      c.mix.displace = m.value("displace", c.mix.displace);
    }
    get("max_displacement", c.max_displacement);
    get("r_cut", c.r_cut);
    get("n_equilibrate", c.n_equilibrate);
    get("n_sample", c.n_sample);
    get("sample_interval", c.sample_interval);
    get("blocks_per_chain", c.blocks_per_chain);
    get("bin_width", c.bin_width);
    get("seed", c.seed);
    get("n_chains", c.n_chains);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed GCMC configuration: ") + e.what());
  }
  return c;
}

}  // namespace boltzinv::io
