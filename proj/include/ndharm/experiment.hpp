#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ndharm/flow.hpp"

namespace ndharm {

struct InitialSpec {
  std::string preset = "linear";  ///< linear, perturbed-linear, point, onto-geodesic
  Winding winding;
  std::vector<double> base;
  double amplitude = 0.0;
  int modes = 4;
  std::uint64_t seed = 1;
  /// Second seed; when set the experiment also runs the pair and reports
  /// the distance between the two limits.
  std::uint64_t pair_seed = 0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DomainSpec domain;
  std::string target;
  std::map<std::string, double> target_params;
  InitialSpec initial;
  FlowConfig flow;
  std::string output;  ///< empty: runs/<name>
};

/// Flat "key = value" text with [domain] [target] [initial] [run] sections.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// "1,0;0,1" -> rows per target component.
Winding parse_winding(const std::string& text);

MapField build_initial(const DomainStructure& domain, const TargetPtr& target, const InitialSpec& spec);
MapField build_initial(const DomainStructure& domain, const TargetPtr& target, const InitialSpec& spec,
                       std::uint64_t seed);

struct ExperimentResult {
  RunResult run;
  /// Flat numeric evidence, e.g. predicted_drift_0, divergence_gap, pair_distance.
  std::map<std::string, double> evidence;
  std::vector<std::string> warnings;
  std::string output_dir;  ///< empty when artifacts were not written
};

struct RunOptions {
  bool write_artifacts = true;
  std::string output_dir;  ///< overrides the config/env resolution when set
};

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// 0 converged, 2 circling, 3 blowup, 4 budget, 5 chart_exit.
int exit_code(VerdictKind kind);
inline constexpr int kExitConfigError = 64;
inline constexpr int kExitVerifyMismatch = 1;
inline constexpr int kExitVerifyEmpty = 65;

/// Output directory for a run: NDHARM_OUTPUT_ROOT/<name> when the variable is
/// set, else the config's output entry, else runs/<name>.
std::string resolve_output_dir(const ExperimentConfig& config);

std::string verdict_json(const ExperimentConfig& config, const ExperimentResult& result);
void write_monitors_csv(const std::vector<MonitorRecord>& history, std::ostream& os);
void write_snapshot(const FlowState& state, const PeriodicGrid& grid, std::ostream& os);
void write_summary_svg(const std::vector<MonitorRecord>& history, const std::string& title, std::ostream& os);

struct ScenarioInfo {
  std::string name;
  std::string description;
  std::string claim;
  VerdictKind expected;
  std::string config;  ///< config text
};

const std::vector<ScenarioInfo>& scenarios();
const ScenarioInfo& find_scenario(const std::string& name);

/// Numeric values compared against golden records.
std::map<std::string, double> golden_values(const ExperimentResult& result);

/// Reruns every scenario whose name contains `filter` and compares with
/// <golden_dir>/<name>.golden. Writes a report; returns 0 on success,
/// kExitVerifyMismatch on any mismatch, kExitVerifyEmpty when nothing matched.
int verify_goldens(const std::string& filter, const std::string& golden_dir, std::ostream& report);
/// Regenerates golden files for matching scenarios.
int bless_goldens(const std::string& filter, const std::string& golden_dir, std::ostream& report);
std::string default_golden_dir();

void dump_operator(const ExperimentConfig& config, std::ostream& os);

}  // namespace ndharm
