#include "ndharm/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "ndharm/error.hpp"

namespace ndharm {

const char* to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::converged: return "converged";
    case VerdictKind::circling: return "circling";
    case VerdictKind::blowup: return "blowup";
    case VerdictKind::chart_exit: return "chart_exit";
    case VerdictKind::budget: return "budget";
  }
  return "unknown";
}

const char* to_string(Scheme scheme) { return scheme == Scheme::euler ? "euler" : "midpoint"; }

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit fit;
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2 || x.size() != y.size()) return fit;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 0.0;
  return fit;
}

namespace {

double sup_of(const std::vector<double>& v) { return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end()); }

bool axpy(MapField& f, double dt, const VectorField& v) {
  auto vals = f.mutable_values();
  bool ok = true;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    vals[i] += dt * v[i];
    ok &= std::isfinite(vals[i]);
  }
  return ok;
}

// Returns false on chart exit.
bool eval_tension(const DomainStructure& domain, const MapField& f, VectorField& out) {
  try {
    tension(domain, f, out);
    return true;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::chart) return false;
    throw;
  }
}

StepSignal advance(const DomainStructure& domain, MapField& f, double dt, Scheme scheme, const VectorField& tau,
                   VectorField& scratch) {
  if (scheme == Scheme::euler) {
    if (!axpy(f, dt, tau)) return StepSignal::blowup;
  } else {
    MapField half = f;
    if (!axpy(half, 0.5 * dt, tau)) return StepSignal::blowup;
    if (!half.in_chart() || !eval_tension(domain, half, scratch)) return StepSignal::chart_exit;
    if (!axpy(f, dt, scratch)) return StepSignal::blowup;
  }
  if (!f.target().flat_chart() && !f.in_chart()) return StepSignal::chart_exit;
  return StepSignal::ok;
}

std::vector<double> mu_average(const MapField& f, const std::vector<int>& comps, std::span<const double> mu) {
  std::vector<double> out;
  const auto n = static_cast<std::size_t>(f.components());
  for (int c : comps) {
    double acc = 0.0;
    for (std::size_t node = 0; node < f.nodes(); ++node) acc += mu[node] * f.values()[node * n + static_cast<std::size_t>(c)];
    out.push_back(acc);
  }
  return out;
}

}  // namespace

StepResult step(const DomainStructure& domain, const FlowState& state, Scheme scheme) {
  StepResult res{state, StepSignal::ok};
  if (!(state.dt > 0.0)) fail(ErrorCode::invalid_argument, "step needs a positive dt");
  VectorField tau, scratch;
  if (!eval_tension(domain, state.f, tau)) {
    res.signal = StepSignal::chart_exit;
    return res;
  }
  res.signal = advance(domain, res.state.f, state.dt, scheme, tau, scratch);
  if (res.signal == StepSignal::ok) {
    res.state.t += state.dt;
    ++res.state.steps;
  }
  return res;
}

double stable_dt(const DomainStructure& domain, const MapField& f, double safety) {
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const int n = f.components();
  const auto un = static_cast<std::size_t>(n);
  const auto ud = static_cast<std::size_t>(d);
  const TargetManifold& target = f.target();
  const bool flat = target.flat_chart();
  std::vector<double> grad, gamma(un * un * un), eta;
  if (!flat) {
    grad = centered_gradient(domain, f);
    eta = energy_density(domain, f);
  }
  double worst = 0.0;
  for (std::size_t node = 0; node < domain.size(); ++node) {
    double rate = 0.0;
    for (int j = 0; j < d; ++j) {
      const double h = grid.spacing(j);
      rate += 2.0 * domain.a(node, j, j) / (h * h) + std::abs(domain.b(node, j)) / h;
    }
    if (!flat) {
      // linearized Christoffel term: transport-like 2 Gamma(df, d.) plus curvature-sized zeroth order
      target.christoffel(f.point(node), gamma);
      double gmax = 0.0;
      for (double g : gamma) gmax = std::max(gmax, std::abs(g));
      for (int j = 0; j < d; ++j) {
        double flux = 0.0;
        for (int k = 0; k < d; ++k) {
          double dk = 0.0;
          for (int a = 0; a < n; ++a)
            dk = std::max(dk, std::abs(grad[(node * ud + static_cast<std::size_t>(k)) * un + static_cast<std::size_t>(a)]));
          flux += std::abs(domain.a(node, j, k)) * dk;
        }
        rate += 2.0 * gmax * flux * static_cast<double>(n) / grid.spacing(j);
      }
      rate += 2.0 * target.curvature_bound() * eta[node];
    }
    worst = std::max(worst, rate);
  }
  if (!(worst > 0.0)) fail(ErrorCode::numeric, "stable_dt: degenerate operator");
  return safety / worst;
}

RunResult run(const DomainStructure& domain, const MapField& initial, const FlowConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  if (config.tol_converged <= 0.0 || config.tol_plateau <= 0.0 || config.window < 3 || config.record_every < 1 ||
      config.blowup_factor <= 1.0 || config.max_steps < 0)
    fail(ErrorCode::config, "invalid flow configuration");
  if (!initial.finite()) fail(ErrorCode::invalid_argument, "initial map is not finite");
  if (!initial.in_chart()) fail(ErrorCode::chart, "initial map leaves the target chart");
  if (!initial.lift_consistent(domain.grid())) fail(ErrorCode::invalid_argument, "initial lift is discontinuous");

  const TargetManifold& target = initial.target();
  const auto periodic = target.periodic_components();
  std::vector<double> mu;
  if (!periodic.empty()) mu = invariant_measure(scalar_operator_matrix(domain));

  RunResult out{FlowState{initial, 0.0, 0.0, 0, {}}, RunVerdict{}};
  FlowState& st = out.state;
  RunVerdict& verdict = out.verdict;
  const CurvatureSign sign = target.curvature_sign();
  verdict.monotonicity_checked = sign != CurvatureSign::positive;
  const double cell = domain.grid().cell_volume();

  VectorField tau, scratch;
  std::vector<double> rec_t, rec_speed, rec_homotopy;
  std::vector<std::vector<double>> rec_avg(periodic.size());
  double initial_eta = 0.0;

  auto finish = [&](VerdictKind kind, std::string note = {}) {
    verdict.kind = kind;
    verdict.note = std::move(note);
  };

  auto record = [&]() {
    MonitorRecord r;
    r.t = st.t;
    const auto speeds = squared_norms(st.f, tau);
    r.sup_speed = sup_of(speeds);
    const auto eta = energy_density(domain, st.f);
    r.sup_eta = sup_of(eta);
    double total = 0.0;
    for (double e : eta) total += e;
    r.total_energy = total * cell;
    r.homotopy_sup = sup_of(homotopy_distance_field(st.f, initial));
    if (!mu.empty()) {
      const auto un = static_cast<std::size_t>(st.f.components());
      for (std::size_t p = 0; p < periodic.size() && p < 2; ++p) {
        double acc = 0.0;
        for (std::size_t node = 0; node < st.f.nodes(); ++node)
          acc += mu[node] * tau[node * un + static_cast<std::size_t>(periodic[p])];
        r.drift[p] = acc;
      }
    }
    r.parallel_residual = parallel_section_residual(domain, st.f, normalized(st.f, tau));
    st.history.push_back(r);
    rec_t.push_back(r.t);
    rec_speed.push_back(r.sup_speed);
    rec_homotopy.push_back(r.homotopy_sup);
    if (!mu.empty()) {
      const auto avg = mu_average(st.f, periodic, mu);
      for (std::size_t p = 0; p < periodic.size(); ++p) rec_avg[p].push_back(avg[p]);
    }
    return r;
  };

  // Trailing-window fits; returns true when all circling conditions hold.
  auto circling = [&]() {
    const auto w = static_cast<std::size_t>(config.window);
    if (rec_t.size() < w || periodic.empty()) return false;
    const std::size_t from = rec_t.size() - w;
    const auto [lo, hi] = std::minmax_element(rec_speed.begin() + static_cast<std::ptrdiff_t>(from), rec_speed.end());
    if (!(*hi > 0.0) || (*hi - *lo) / *hi >= config.tol_plateau) return false;
    if (!(std::sqrt(rec_speed.back()) > 10.0 * config.tol_converged)) return false;
    const std::span<const double> ts(rec_t.data() + from, w);
    double best_slope = 0.0, best_r2 = 0.0;
    std::vector<double> slopes;
    for (auto& series : rec_avg) {
      const auto fit = fit_line(ts, std::span<const double>(series.data() + from, w));
      slopes.push_back(fit.slope);
      if (std::abs(fit.slope) >= std::abs(best_slope)) {
        best_slope = fit.slope;
        best_r2 = fit.r2;
      }
    }
    if (!(best_r2 > config.r2_min)) return false;
    verdict.drift = slopes;
    verdict.drift_r2 = best_r2;
    const auto hfit = fit_line(ts, std::span<const double>(rec_homotopy.data() + from, w));
    verdict.homotopy_slope = hfit.slope;
    verdict.homotopy_r2 = hfit.r2;
    return true;
  };

  if (!eval_tension(domain, st.f, tau)) fail(ErrorCode::chart, "initial map leaves the target chart");
  st.dt = stable_dt(domain, st.f, config.safety);
  initial_eta = record().sup_eta;
  double speed = sup_of(squared_norms(st.f, tau));
  bool done = false;
  long next_snapshot = config.snapshot_every > 0 ? config.snapshot_every : -1;

  while (!done) {
    if (std::sqrt(speed) < config.tol_converged) {
      finish(VerdictKind::converged);
      break;
    }
    if (st.steps >= config.max_steps) {
      finish(VerdictKind::budget);
      break;
    }
    const StepSignal sig = advance(domain, st.f, st.dt, config.scheme, tau, scratch);
    if (sig == StepSignal::blowup) {
      finish(VerdictKind::blowup, "non-finite update");
      break;
    }
    if (sig == StepSignal::chart_exit) {
      finish(VerdictKind::chart_exit);
      break;
    }
    st.t += st.dt;
    ++st.steps;
    if (!eval_tension(domain, st.f, tau)) {
      finish(VerdictKind::chart_exit);
      break;
    }
    const double next = sup_of(squared_norms(st.f, tau));
    if (!std::isfinite(next)) {
      finish(VerdictKind::blowup, "non-finite tension");
      break;
    }
    if (verdict.monotonicity_checked && next > speed + 1e-8 * (1.0 + speed)) ++verdict.monotonicity_violations;
    speed = next;

    if (st.steps == next_snapshot && config.on_snapshot) {
      config.on_snapshot(st);
      next_snapshot += config.snapshot_every;
    }
    if (st.steps % config.record_every == 0) {
      const MonitorRecord r = record();
      if (!std::isfinite(r.sup_eta) || r.sup_eta > config.blowup_factor * std::max(initial_eta, 1e-300)) {
        finish(VerdictKind::blowup, "energy density exceeded the blow-up factor");
        break;
      }
      if (!st.f.lift_consistent(domain.grid())) {
        finish(VerdictKind::blowup, "lift lost continuity");
        break;
      }
      if (circling()) {
        finish(VerdictKind::circling);
        done = true;
      }
      st.dt = stable_dt(domain, st.f, config.safety);
    }
  }

  if (verdict.kind != VerdictKind::blowup && verdict.kind != VerdictKind::chart_exit) {
    if (st.history.empty() || st.history.back().t != st.t) record();
    verdict.parallel_residual = st.history.back().parallel_residual;
  }
  verdict.final_sup_tension = std::sqrt(speed);
  verdict.steps = st.steps;
  verdict.t = st.t;
  if (verdict.kind != VerdictKind::circling && !mu.empty()) {
    // drift evidence from whatever trailing window exists
    const std::size_t w = std::min<std::size_t>(rec_t.size(), static_cast<std::size_t>(config.window));
    if (w >= 2) {
      const std::size_t from = rec_t.size() - w;
      const std::span<const double> ts(rec_t.data() + from, w);
      verdict.drift.clear();
      for (auto& series : rec_avg)
        verdict.drift.push_back(fit_line(ts, std::span<const double>(series.data() + from, w)).slope);
      const auto hfit = fit_line(ts, std::span<const double>(rec_homotopy.data() + from, w));
      verdict.homotopy_slope = hfit.slope;
      verdict.homotopy_r2 = hfit.r2;
    }
  }
  if (config.on_snapshot) config.on_snapshot(st);
  verdict.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace ndharm
