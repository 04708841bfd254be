#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "boltzinv/gcmc.hpp"
#include "boltzinv/potentials.hpp"
#include "json.hpp"

namespace boltzinv::io {

namespace fs = std::filesystem;

/// Sidecar of a CSV file: the same path with ".json" appended.
fs::path sidecar_path(const fs::path& csv);

/// Shortest round-trip text for a double ("%.17g").
std::string format_double(double x);
/// JSON number, or the strings "inf", "-inf", "nan".
nlohmann::json json_number(double x);
double number_from_json(const nlohmann::json& j);

nlohmann::json read_json(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& j);

/// Header "r,<value_column>[,extra names...]", one row per node.
void write_csv(const fs::path& path, const RadialFunction& f, const std::string& value_column = "value",
               const std::vector<std::pair<std::string, Eigen::ArrayXd>>& extra = {});
/// Writes the CSV plus its {alpha, tail_exponent, r_max} sidecar.
void write_radial_function(const fs::path& path, const RadialFunction& f, double alpha,
                           const std::string& value_column = "value");

struct RadialTable {
  RadialFunction f;
  double alpha = 6.0;
  bool has_sidecar = false;
  nlohmann::json sidecar;
};

/// Reads the first two columns of a CSV with a header line. The tail exponent
/// and alpha come from the sidecar when present, else from the defaults.
RadialTable read_radial_function(const fs::path& path, double default_tail = kCompactTail,
                                 double default_alpha = 6.0);

nlohmann::json to_json(const LJTypeParams& p);
LJTypeParams params_from_json(const nlohmann::json& j);

/// Analytic forms inline; tabulated potentials reference a CSV next to `dir`.
nlohmann::json to_json(const Potential& u);
Potential potential_from_json(const nlohmann::json& j, const fs::path& dir);

/// Tabulated potential as CSV (r,u) plus sidecar with params and tail exponent.
void write_potential_csv(const fs::path& path, const RadialFunction& u, const LJTypeParams& p);

/// A potential from either a JSON description or a CSV table with sidecar.
/// Throws InputError when the file is missing or malformed.
Potential read_potential(const fs::path& path);

nlohmann::json to_json(const EnsembleParams& e);
nlohmann::json to_json(const GCMCConfig& c);
/// Fields present in `j` override `base`.
GCMCConfig gcmc_config_from_json(const nlohmann::json& j, GCMCConfig base = {});

}  // namespace boltzinv::io
