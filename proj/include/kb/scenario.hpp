#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kb/analysis.hpp"
#include "kb/config.hpp"
#include "kb/solver.hpp"

namespace kb {

inline constexpr const char* kVersion = "0.1.0";

/// Outcome of `run`: verdict summary plus where the artifacts landed.
struct RunResult {
  bool pass = false;
  std::string artifact_dir;
  std::vector<CheckVerdict> verdicts;
  std::string summary_json;
};

/// Execute a scenario end to end: barrier construction, beginning
/// condition, monotone iteration, requested checks, artifact emission
/// under <out>/<scenario>/.
RunResult run_scenario(const ScenarioConfig& cfg, unsigned workers);

/// Closed-form and geometry suite (no transport solve).
struct VerifyItem {
  std::string name;
  bool pass = false;
  double worst = 0.0;
  std::string detail;
};
struct VerifyReport {
  std::vector<VerifyItem> items;
  bool pass = false;
  double seconds = 0.0;
  std::string to_json() const;
  std::string to_text() const;
};

/// `inject_fault` flips a sign inside the suite's own collision-geometry
/// replica so tests can confirm the suite catches broken invariants.
VerifyReport verify_suite(const std::string& inject_fault = "");

/// Gain-quadrature throughput over worker counts.
struct BenchEntry {
  unsigned workers = 1;
  double seconds_per_gain = 0.0;
  double xcells_per_second = 0.0;
};
struct BenchReport {
  std::vector<BenchEntry> entries;
  bool deterministic = false;      // two single-worker runs agree bitwise
  double nsigma_cost_ratio = 0.0;  // doubling Nsigma vs base, per gain
  std::string to_json() const;
  std::string to_text() const;
};
BenchReport bench_scenario(const ScenarioConfig& cfg, unsigned max_workers);

}  // namespace kb
