#pragma once

#include <string>
#include <vector>

#include "jkoflow/jko.hpp"

namespace jkoflow {

// Fully parsed scenario file (schema v1): grid, initial density, functional
// terms with their declared constants, stepper configuration, requested
// checks with caps, report exponents and output policy.
struct Scenario {
  std::string name;
  Grid grid = Grid::line(2, 0.0, 1.0);
  DensityField initial;
  Functional functional;
  JkoConfig jko;
  std::vector<CheckRequest> checks;
  ReportSpec report;
  std::string out_dir;        // default "out", overridable
  int snapshot_every = 0;     // 0 disables periodic snapshots
  double oracle_tol = 1e-5;
  double budget_seconds = 0.0;  // informational
};

Scenario load_scenario(const std::string& path);

struct ScenarioOptions {
  std::string out_dir;       // overrides scenario and environment
  int snapshot_every = -1;   // overrides when >= 0
  bool verbose = false;
};

// Executes the scheme described by the scenario; writes the CSV report,
// density snapshots and a summary block. Exit codes: 0 all checks pass,
// 2 at least one check failed, 1 parse or solver error.
int run_scenario(const std::string& path, const ScenarioOptions& opts = {});

// Runs one proximal step and the brute-force reference on the same inputs
// and writes the objective gap; exit 0 iff |gap| <= scenario oracle_tol.
int compare_oracle(const std::string& path, const ScenarioOptions& opts = {});

}  // namespace jkoflow
