#pragma once

// The invariant suites behind `fibersys check`: system, transport, curvature,
// holonomy, universal and reconstruction. Every check reports a residual and
// the tolerance it is held to; a check passes when residual <= tolerance.

#include "fibersys/scenario.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace fibersys {

enum class CheckStatus { Pass, Fail, Skip };

struct CheckEntry {
  std::string suite;
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double residual = 0.0;
  double tolerance = 0.0;
  double runtime_ms = 0.0;
  std::string note;
};

struct CheckOptions {
  std::uint64_t seed = 0;
  int steps = 400;
  double tol_scale = 1.0;
};

struct Report {
  std::string scenario;
  CheckOptions options;
  std::vector<std::string> suites;
  std::vector<CheckEntry> entries;

  bool all_pass() const;
  int count(CheckStatus status) const;
};

const std::vector<std::string>& suite_names();

// Unknown suite names throw DomainError. An empty selection runs everything.
Report run_check_suite(const Scenario& scenario, const std::vector<std::string>& suites, const CheckOptions& options);

std::string status_name(CheckStatus status);
std::string report_json(const Report& report, bool timing);
std::string report_csv(const Report& report, bool timing);

}  // namespace fibersys
