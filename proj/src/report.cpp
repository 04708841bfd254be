#include "boltzinv/report.hpp"

#include <cmath>

namespace boltzinv {

InequalityReport InequalityReport::make(std::string name, double lhs, double rhs, bool pass, std::string detail) {
  return {std::move(name), lhs, rhs, rhs - lhs, pass, std::move(detail)};
}

namespace {
// JSON has no infinities; encode them as strings.
nlohmann::json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}
}  // namespace

nlohmann::json to_json(const InequalityReport& r) {
  nlohmann::json j = {{"inequality", r.inequality}, {"lhs", number(r.lhs)}, {"rhs", number(r.rhs)},
                      {"slack", number(r.slack)}, {"pass", r.pass}};
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

nlohmann::json to_json(const std::vector<InequalityReport>& rs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rs) a.push_back(to_json(r));
  return a;
}

}  // namespace boltzinv
