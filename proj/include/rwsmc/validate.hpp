#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rwsmc {

struct CheckResult {
  int id = 0;
  std::string description;
  bool pass = false;
  std::string measured;
  std::string expected;
  double seconds = 0.0;
};

struct ValidateOptions {
  std::uint64_t seed = 20240601;
  int threads = 0;  // 0: default_thread_count()
  bool verbose = false;
};

// Suites: selection (1), ffbs (2), invariance (3, 4, 6), bounds (5),
// limits (7-11), params (12), all. Unknown names throw ConfigError.
std::vector<CheckResult> run_suite(const std::string& suite, const ValidateOptions& opt = {});
std::vector<std::string> suite_names();

// One check by criterion number.
CheckResult run_check(int id, const ValidateOptions& opt = {});

std::string format_report(const std::vector<CheckResult>& results);

}  // namespace rwsmc
