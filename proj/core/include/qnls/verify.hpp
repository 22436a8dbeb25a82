#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace qnls {

enum class CheckStatus { Pass, Fail, Warn };
std::string to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double value = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyOptions {
  double L = 40.0;
  int n = 1024;
  // Test hook: scales kappa2 in the expected Gram table.
  double kappa2_factor = 1.0;
  // Runs the longer conservation checks (two short evolutions).
  bool conservation = true;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  double resolution_indicator = 0.0;
  bool ok() const;  // no FAIL entries
  nlohmann::json to_json() const;
};

// Estimated spectral truncation error of phi0 on a grid of half length L
// with n points: 3^{1/4} exp(-pi k_max / 4) k_max^2, k_max = pi n / (2 L).
double resolution_indicator(double L, int n);
// Failing resolution-sensitive checks are reported as WARN above this.
inline constexpr double kUnderresolved = 1e-9;

VerifyReport cmd_verify(const VerifyOptions& options = {});

}  // namespace qnls
