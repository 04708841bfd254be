#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace boltzinv {

/// One executable inequality lhs <= rhs.
struct InequalityReport {
  std::string inequality;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  ///< rhs - lhs
  bool pass = false;
  std::string detail;

  static InequalityReport make(std::string name, double lhs, double rhs, bool pass, std::string detail = {});
};

nlohmann::json to_json(const InequalityReport& r);
nlohmann::json to_json(const std::vector<InequalityReport>& rs);

}  // namespace boltzinv
