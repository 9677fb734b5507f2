#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ndharm/diagnostics.hpp"

namespace ndharm {

enum class Scheme { euler, midpoint };
enum class VerdictKind { converged, circling, blowup, chart_exit, budget };

const char* to_string(VerdictKind kind);
const char* to_string(Scheme scheme);

struct FlowState {
  MapField f;
  double t = 0.0;
  double dt = 0.0;
  long steps = 0;
  std::vector<MonitorRecord> history;
};

enum class StepSignal { ok, blowup, chart_exit };

struct StepResult {
  FlowState state;
  StepSignal signal = StepSignal::ok;
};

/// One explicit step f <- f + dt * tension (Euler) or the midpoint variant,
/// using state.dt. Lifts are advanced continuously.
StepResult step(const DomainStructure& domain, const FlowState& state, Scheme scheme = Scheme::euler);

/// safety / max_x [2 sum_j A^jj/h_j^2 + sum_j |B^j|/h_j + nonlinear margin].
double stable_dt(const DomainStructure& domain, const MapField& f, double safety = 0.9);

struct FlowConfig {
  Scheme scheme = Scheme::euler;
  double tol_converged = 1e-6;
  double tol_plateau = 1e-3;
  int window = 200;  ///< records
  double r2_min = 0.999;
  double blowup_factor = 100.0;
  long max_steps = 200000;
  int record_every = 50;
  double safety = 0.9;
  long snapshot_every = 0;  ///< steps; 0 = only the final state
  std::function<void(const FlowState&)> on_snapshot;
};

struct RunVerdict {
  VerdictKind kind = VerdictKind::budget;
  double final_sup_tension = 0.0;  ///< sup_x |tau|_g at the end
  std::vector<double> drift;       ///< regression slope of each mu-averaged periodic lift
  double drift_r2 = 0.0;           ///< R^2 of the dominant drift fit
  double homotopy_slope = 0.0;
  double homotopy_r2 = 0.0;
  double parallel_residual = 0.0;  ///< of the normalized terminal tension
  long monotonicity_violations = 0;
  bool monotonicity_checked = false;
  long steps = 0;
  double t = 0.0;
  double wall_seconds = 0.0;
  std::string note;
};

struct RunResult {
  FlowState state;
  RunVerdict verdict;
};

/// Iterates step with monitors every record_every steps until a verdict.
RunResult run(const DomainStructure& domain, const MapField& initial, const FlowConfig& config);

/// Least-squares line y = slope * x + intercept.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

}  // namespace ndharm
