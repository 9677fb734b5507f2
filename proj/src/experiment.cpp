#include "ndharm/experiment.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "ndharm/error.hpp"

namespace ndharm {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

double to_double(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
    fail(ErrorCode::config, "'" + key + "' expects a number, got '" + text + "'");
  return v;
}

long to_long(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  long v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
    fail(ErrorCode::config, "'" + key + "' expects an integer, got '" + text + "'");
  return v;
}

std::uint64_t to_seed(const std::string& text, const std::string& key) {
  const std::string t = trim(text);
  std::uint64_t v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size() || t.empty())
    fail(ErrorCode::config, "'" + key + "' expects a nonnegative integer");
  return v;
}

std::vector<double> to_doubles(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const auto& p : split(text, ',')) out.push_back(to_double(p, key));
  return out;
}

// Uniform [0, 1) from the raw 64-bit stream; independent of the standard
// library's distribution implementations.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

Winding parse_winding(const std::string& text) {
  Winding w;
  if (trim(text).empty()) return w;
  for (const auto& row : split(text, ';')) {
    std::vector<int> r;
    for (const auto& e : split(row, ',')) {
      const long v = to_long(e, "winding");
      r.push_back(static_cast<int>(v));
    }
    w.push_back(std::move(r));
  }
  return w;
}

ExperimentConfig parse_config(std::istream& in) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorCode::config, std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) fail(ErrorCode::config, "config: key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string v = node.data();
      if (section == "domain") {
        if (key == "name") cfg.domain.name = v;
        else if (key == "preset") cfg.domain.preset = v;
        else if (key == "extents") {
          for (const auto& e : split(v, ',')) cfg.domain.extents.push_back(static_cast<int>(to_long(e, key)));
        } else cfg.domain.params[key] = to_double(v, key);
      } else if (section == "target") {
        if (key == "name") cfg.target = v;
        else cfg.target_params[key] = to_double(v, key);
      } else if (section == "initial") {
        auto& s = cfg.initial;
        if (key == "preset") s.preset = v;
        else if (key == "winding") s.winding = parse_winding(v);
        else if (key == "base") s.base = to_doubles(v, key);
        else if (key == "amplitude") s.amplitude = to_double(v, key);
        else if (key == "modes") s.modes = static_cast<int>(to_long(v, key));
        else if (key == "seed") s.seed = to_seed(v, key);
        else if (key == "pair_seed") s.pair_seed = to_seed(v, key);
        else fail(ErrorCode::config, "config: unknown key initial." + key);
      } else if (section == "run") {
        auto& f = cfg.flow;
        if (key == "name") cfg.name = v;
        else if (key == "output") cfg.output = v;
        else if (key == "scheme") {
          if (v == "euler") f.scheme = Scheme::euler;
          else if (v == "midpoint" || v == "rk2") f.scheme = Scheme::midpoint;
          else fail(ErrorCode::config, "config: unknown scheme '" + v + "'");
        } else if (key == "tol_converged") f.tol_converged = to_double(v, key);
        else if (key == "tol_plateau") f.tol_plateau = to_double(v, key);
        else if (key == "window") f.window = static_cast<int>(to_long(v, key));
        else if (key == "r2_min") f.r2_min = to_double(v, key);
        else if (key == "blowup_factor") f.blowup_factor = to_double(v, key);
        else if (key == "max_steps") f.max_steps = to_long(v, key);
        else if (key == "record_every") f.record_every = static_cast<int>(to_long(v, key));
        else if (key == "safety") f.safety = to_double(v, key);
        else if (key == "snapshot_every") f.snapshot_every = to_long(v, key);
        else fail(ErrorCode::config, "config: unknown key run." + key);
      } else {
        fail(ErrorCode::config, "config: unknown section [" + section + "]");
      }
    }
  }
  if (cfg.domain.name.empty()) fail(ErrorCode::config, "config: domain.name is required");
  const auto presets = domain_presets(cfg.domain.name);
  if (presets.empty()) fail(ErrorCode::config, "config: unknown domain '" + cfg.domain.name + "'");
  if (cfg.domain.preset.empty()) cfg.domain.preset = presets.front();
  if (cfg.target.empty()) fail(ErrorCode::config, "config: target.name is required");
  const auto& f = cfg.flow;
  if (!(f.tol_converged > 0.0) || !(f.tol_plateau > 0.0) || !(f.blowup_factor > 1.0) || !(f.safety > 0.0) ||
      f.safety > 1.0 || f.window < 3 || f.record_every < 1 || f.max_steps < 0 || f.snapshot_every < 0 ||
      !(f.r2_min > 0.0 && f.r2_min < 1.0))
    fail(ErrorCode::config, "config: run tolerances out of range");
  if (cfg.initial.modes < 1 || cfg.initial.modes > 4) fail(ErrorCode::config, "config: initial.modes must be 1..4");
  // validate catalog names early
  (void)catalog_lookup(cfg.target, cfg.target_params);
  if (std::find(presets.begin(), presets.end(), cfg.domain.preset) == presets.end())
    fail(ErrorCode::config, "config: unknown preset '" + cfg.domain.preset + "' for " + cfg.domain.name);
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open config '" + path + "'");
  auto cfg = parse_config(in);
  if (cfg.name == "experiment") cfg.name = fs::path(path).stem().string();
  return cfg;
}

// ---------------------------------------------------------------------------

MapField build_initial(const DomainStructure& domain, const TargetPtr& target, const InitialSpec& spec) {
  return build_initial(domain, target, spec, spec.seed);
}

MapField build_initial(const DomainStructure& domain, const TargetPtr& target, const InitialSpec& spec,
                       std::uint64_t seed) {
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const int n = target->dim();
  const auto periods = target->periods();
  const auto name = target->name();

  Winding winding = spec.winding;
  if (winding.empty()) winding.assign(static_cast<std::size_t>(n), std::vector<int>(static_cast<std::size_t>(d), 0));
  if (winding.size() != static_cast<std::size_t>(n))
    fail(ErrorCode::config, "initial.winding needs " + std::to_string(n) + " rows");
  for (const auto& row : winding)
    if (row.size() != static_cast<std::size_t>(d))
      fail(ErrorCode::config, "initial.winding rows need " + std::to_string(d) + " entries");

  std::vector<double> base = spec.base;
  if (base.empty()) {
    base.assign(static_cast<std::size_t>(n), 0.0);
    if (name == "hyperbolic_plane") base[1] = 1.0;
  }
  if (base.size() != static_cast<std::size_t>(n)) fail(ErrorCode::config, "initial.base needs one value per component");

  bool perturb_all = true;
  if (spec.preset == "linear" || spec.preset == "perturbed-linear") {
  } else if (spec.preset == "point") {
    for (const auto& row : winding)
      for (int w : row)
        if (w != 0) fail(ErrorCode::config, "point initial map cannot wind");
  } else if (spec.preset == "onto-geodesic") {
    if (name != "hyperbolic_cylinder") fail(ErrorCode::config, "onto-geodesic needs the hyperbolic_cylinder target");
    base[0] = 0.0;
    perturb_all = false;
  } else {
    fail(ErrorCode::config, "unknown initial preset '" + spec.preset + "'");
  }
  double amplitude = spec.amplitude;
  if (spec.preset == "perturbed-linear" && amplitude == 0.0) amplitude = 0.1;

  // Sine-only modes: the perturbation is odd under x -> -x.
  struct Mode {
    std::array<int, kMaxAxes> k{};
    double c = 0.0;
  };
  std::vector<std::vector<Mode>> modes(static_cast<std::size_t>(n));
  std::mt19937_64 rng(seed);
  for (int i = 0; i < n; ++i)
    for (int m = 0; m < spec.modes; ++m) {
      Mode mode;
      bool nonzero = false;
      while (!nonzero) {
        for (int a = 0; a < d; ++a) {
          mode.k[static_cast<std::size_t>(a)] = static_cast<int>(std::floor(unit(rng) * 5.0)) - 2;
          nonzero |= mode.k[static_cast<std::size_t>(a)] != 0;
        }
      }
      mode.c = 2.0 * unit(rng) - 1.0;
      modes[static_cast<std::size_t>(i)].push_back(mode);
    }

  std::vector<double> values(grid.size() * static_cast<std::size_t>(n));
  for (std::size_t node = 0; node < grid.size(); ++node) {
    std::array<double, kMaxAxes> x{};
    for (int a = 0; a < d; ++a) x[static_cast<std::size_t>(a)] = grid.coordinate(node, a) / grid.period(a);
    for (int i = 0; i < n; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      double v = base[ui];
      for (int a = 0; a < d; ++a) v += winding[ui][static_cast<std::size_t>(a)] * periods[ui] * x[static_cast<std::size_t>(a)];
      if (amplitude != 0.0 && (perturb_all || periods[ui] > 0.0)) {
        double p = 0.0;
        for (const auto& mode : modes[ui]) {
          double phase = 0.0;
          for (int a = 0; a < d; ++a) phase += mode.k[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
          p += mode.c * std::sin(2.0 * M_PI * phase);
        }
        v += amplitude * p;
      }
      values[node * static_cast<std::size_t>(n) + ui] = v;
    }
  }
  MapField f(grid, target, std::move(values), std::move(winding));
  if (!f.in_chart()) fail(ErrorCode::config, "initial map leaves the target chart");
  if (!f.lift_consistent(grid)) fail(ErrorCode::config, "initial perturbation too large for a continuous lift");
  return f;
}

// ---------------------------------------------------------------------------

int exit_code(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::converged: return 0;
    case VerdictKind::circling: return 2;
    case VerdictKind::blowup: return 3;
    case VerdictKind::budget: return 4;
    case VerdictKind::chart_exit: return 5;
  }
  return 1;
}

std::string resolve_output_dir(const ExperimentConfig& config) {
  if (const char* root = std::getenv("NDHARM_OUTPUT_ROOT"); root != nullptr && *root != '\0')
    return (fs::path(root) / config.name).string();
  if (!config.output.empty()) return config.output;
  return (fs::path("runs") / config.name).string();
}

void write_monitors_csv(const std::vector<MonitorRecord>& history, std::ostream& os) {
  os << "t,sup_speed,total_energy,sup_eta,homotopy_sup,drift_s,drift_phi,parallel_residual\n";
  for (const auto& r : history)
    os << fmt(r.t) << ',' << fmt(r.sup_speed) << ',' << fmt(r.total_energy) << ',' << fmt(r.sup_eta) << ','
       << fmt(r.homotopy_sup) << ',' << fmt(r.drift[0]) << ',' << fmt(r.drift[1]) << ',' << fmt(r.parallel_residual)
       << '\n';
}

void write_snapshot(const FlowState& state, const PeriodicGrid& grid, std::ostream& os) {
  os << "# axes=" << grid.axes() << " extents=";
  for (int a = 0; a < grid.axes(); ++a) os << (a ? "," : "") << grid.extent(a);
  os << " target=" << state.f.target().name() << " winding=";
  const auto& w = state.f.winding();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) os << ';';
    for (std::size_t a = 0; a < w[i].size(); ++a) os << (a ? "," : "") << w[i][a];
  }
  os << " t=" << fmt(state.t) << " step=" << state.steps << '\n';
  const auto n = static_cast<std::size_t>(state.f.components());
  for (std::size_t node = 0; node < state.f.nodes(); ++node) {
    for (std::size_t i = 0; i < n; ++i) os << (i ? " " : "") << fmt(state.f.values()[node * n + i]);
    os << '\n';
  }
}

void write_summary_svg(const std::vector<MonitorRecord>& history, const std::string& title, std::ostream& os) {
  constexpr double W = 720, H = 420, L = 70, R = 20, T = 40, B = 50;
  double tmax = 0.0, lo = INFINITY, hi = -INFINITY;
  auto consider = [&](double v) {
    if (v > 0.0 && std::isfinite(v)) {
      lo = std::min(lo, std::log10(v));
      hi = std::max(hi, std::log10(v));
    }
  };
  for (const auto& r : history) {
    tmax = std::max(tmax, r.t);
    consider(r.sup_speed);
    consider(r.homotopy_sup);
  }
  if (!(hi >= lo)) lo = -1, hi = 0;
  lo = std::floor(lo);
  hi = std::ceil(hi);
  if (hi <= lo) hi = lo + 1;
  if (tmax <= 0.0) tmax = 1.0;
  auto px = [&](double t) { return L + (W - L - R) * t / tmax; };
  auto py = [&](double v) { return T + (H - T - B) * (hi - std::log10(v)) / (hi - lo); };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << L << "\" y=\"22\" font-size=\"14\">" << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = py(std::pow(10.0, e));
    os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << y << "\" y2=\"" << y << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << L - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">t (max " << fmt(tmax)
     << ")</text>\n";
  auto series = [&](auto get, const char* color, const char* label, double ly) {
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : history) {
      const double v = get(r);
      if (v > 0.0 && std::isfinite(v)) os << px(r.t) << ',' << py(v) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 150 << "\" y=\"" << ly << "\" fill=\"" << color << "\">" << label << "</text>\n";
  };
  series([](const MonitorRecord& r) { return r.sup_speed; }, "#c0392b", "sup_speed", T + 18);
  series([](const MonitorRecord& r) { return r.homotopy_sup; }, "#2471a3", "homotopy_sup", T + 34);
  os << "</svg>\n";
}

std::string verdict_json(const ExperimentConfig& config, const ExperimentResult& result) {
  const RunVerdict& v = result.run.verdict;
  auto num = [](double x) -> nlohmann::json { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["name"] = config.name;
  j["kind"] = to_string(v.kind);
  j["exit_code"] = exit_code(v.kind);
  j["domain"] = config.domain.name + "/" + config.domain.preset;
  j["target"] = config.target;
  j["scheme"] = to_string(config.flow.scheme);
  nlohmann::json ev;
  ev["final_sup_tension"] = num(v.final_sup_tension);
  ev["drift"] = nlohmann::json::array();
  for (double d : v.drift) ev["drift"].push_back(num(d));
  ev["drift_r2"] = num(v.drift_r2);
  ev["homotopy_slope"] = num(v.homotopy_slope);
  ev["homotopy_r2"] = num(v.homotopy_r2);
  ev["parallel_residual"] = num(v.parallel_residual);
  ev["monotonicity_violations"] = v.monotonicity_violations;
  ev["monotonicity_checked"] = v.monotonicity_checked;
  ev["steps"] = v.steps;
  ev["t"] = num(v.t);
  ev["wall_seconds"] = num(v.wall_seconds);
  for (const auto& [k, x] : result.evidence) ev[k] = num(x);
  j["evidence"] = ev;
  j["note"] = v.note;
  j["warnings"] = result.warnings;
  return j.dump(2);
}

namespace {

double sup_abs_diff(const VectorField& a, const VectorField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const DomainStructure domain = build_domain(config.domain);
  const TargetPtr target = catalog_lookup(config.target, config.target_params);
  const MapField initial = build_initial(domain, target, config.initial);

  const auto op = scalar_operator_matrix(domain);
  std::string output_dir;
  if (options.write_artifacts) {
    output_dir = options.output_dir.empty() ? resolve_output_dir(config) : options.output_dir;
    std::error_code ec;
    fs::create_directories(fs::path(output_dir) / "snapshots", ec);
    if (ec) fail(ErrorCode::io, "cannot create output directory '" + output_dir + "': " + ec.message());
  }

  FlowConfig flow = config.flow;
  if (options.write_artifacts) {
    const fs::path snapdir = fs::path(output_dir) / "snapshots";
    flow.on_snapshot = [snapdir, &domain](const FlowState& st) {
      std::ostringstream name;
      name << "step_" << std::setw(9) << std::setfill('0') << st.steps << ".txt";
      std::ofstream out(snapdir / name.str());
      if (!out) fail(ErrorCode::io, "cannot write snapshot " + name.str());
      write_snapshot(st, domain.grid(), out);
    };
  }
  ExperimentResult res{run(domain, initial, flow), {}, op.warnings, output_dir};
  const RunVerdict& v = res.run.verdict;
  const FlowState& st = res.run.state;

  res.evidence["dt"] = st.dt;
  if (!st.history.empty()) {
    const auto& last = st.history.back();
    res.evidence["final_sup_speed"] = last.sup_speed;
    res.evidence["final_total_energy"] = last.total_energy;
    res.evidence["final_sup_eta"] = last.sup_eta;
    res.evidence["final_homotopy_sup"] = last.homotopy_sup;
    double max_energy = 0.0;
    for (const auto& r : st.history) max_energy = std::max(max_energy, r.total_energy);
    res.evidence["max_total_energy"] = max_energy;
  }
  for (std::size_t i = 0; i < v.drift.size(); ++i) res.evidence["drift_" + std::to_string(i)] = v.drift[i];

  if (target->flat_chart() && target->has_periodic_component()) {
    InitialSpec ref = config.initial;
    ref.preset = "linear";
    ref.amplitude = 0.0;
    const MapField reference = build_initial(domain, target, ref);
    const auto c = drift_prediction(domain, reference);
    double best = 0.0, emp = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      res.evidence["predicted_drift_" + std::to_string(i)] = c[i];
      if (std::abs(c[i]) >= std::abs(best)) {
        best = c[i];
        emp = i < v.drift.size() ? v.drift[i] : 0.0;
      }
    }
    if (v.kind == VerdictKind::circling && best != 0.0) res.evidence["drift_relative_error"] = std::abs(emp - best) / std::abs(best);
  }

  if (v.kind == VerdictKind::converged || v.kind == VerdictKind::circling || v.kind == VerdictKind::budget) {
    res.evidence["divergence_gap"] = sup_abs_diff(tension(domain, st.f), divergence_tension(domain, st.f));
  }

  if (config.initial.pair_seed != 0) {
    const MapField other = build_initial(domain, target, config.initial, config.initial.pair_seed);
    FlowConfig quiet = config.flow;
    const RunResult pair = run(domain, other, quiet);
    res.evidence["pair_converged"] = pair.verdict.kind == VerdictKind::converged ? 1.0 : 0.0;
    res.evidence["pair_final_sup_tension"] = pair.verdict.final_sup_tension;
    res.evidence["pair_monotonicity_violations"] = static_cast<double>(pair.verdict.monotonicity_violations);
    const auto limits = homotopy_distance_field(pair.state.f, st.f);
    res.evidence["pair_distance"] = *std::max_element(limits.begin(), limits.end());
    const auto starts = homotopy_distance_field(other, initial);
    res.evidence["initial_distance"] = *std::max_element(starts.begin(), starts.end());
  }

  if (options.write_artifacts) {
    const fs::path dir(res.output_dir);
    {
      std::ofstream out(dir / "monitors.csv");
      if (!out) fail(ErrorCode::io, "cannot write monitors.csv");
      write_monitors_csv(st.history, out);
    }
    {
      std::ofstream out(dir / "verdict.json");
      if (!out) fail(ErrorCode::io, "cannot write verdict.json");
      out << verdict_json(config, res) << '\n';
    }
    {
      std::ofstream out(dir / "summary.svg");
      if (!out) fail(ErrorCode::io, "cannot write summary.svg");
      write_summary_svg(st.history, config.name + ": " + to_string(v.kind), out);
    }
  }
  return res;
}

// ---------------------------------------------------------------------------

const std::vector<ScenarioInfo>& scenarios() {
  static const std::vector<ScenarioInfo> list = {
      {"converge-1d-circle",
       "circle domain with operator a(x) d^2, a = 2 + sin 2 pi x, mapped to a circle with winding 1",
       "existence for flat targets; limit is the linear map shifted by the invariant-measure average",
       VerdictKind::converged,
       R"([domain]
name = torus1d
preset = coefficient-sine
extents = 128
[target]
name = circle
[initial]
preset = perturbed-linear
winding = 1
amplitude = 0.1
seed = 11
[run]
name = converge-1d-circle
record_every = 200
max_steps = 400000
)"},
      {"converge-2d-torus",
       "bumpy affine torus to the flat 2-torus in the identity class",
       "affine harmonic maps into flat targets exist in every homotopy class without parallel obstruction",
       VerdictKind::converged,
       R"([domain]
name = torus2d
preset = bumpy
extents = 32
[target]
name = flat_torus
n = 2
[initial]
preset = perturbed-linear
winding = 1,0;0,1
amplitude = 0.05
seed = 5
[run]
name = converge-2d-torus
record_every = 100
max_steps = 200000
)"},
      {"hopf-circling",
       "anisotropic Hopf torus to a circle, winding along the radial loop",
       "the flow may rather circle around N forever: drift equals the invariant-measure prediction",
       VerdictKind::circling,
       R"([domain]
name = hopf2d
preset = anisotropic
extents = 32,32
[target]
name = circle
[initial]
preset = perturbed-linear
winding = 1,0
amplitude = 0.05
seed = 7
[run]
name = hopf-circling
record_every = 50
max_steps = 400000
)"},
      {"hopf-conformal",
       "conformal Hopf torus to a circle, same winding as hopf-circling",
       "with vanishing first-order terms the predicted drift is zero and the flow converges",
       VerdictKind::converged,
       R"([domain]
name = hopf2d
preset = conformal
extents = 32,32
[target]
name = circle
[initial]
preset = perturbed-linear
winding = 1,0
amplitude = 0.05
seed = 7
[run]
name = hopf-conformal
record_every = 50
max_steps = 400000
)"},
      {"kahler-reduction",
       "conformal complex torus (Kaehler) to the hyperbolic cylinder",
       "in the Kaehler case a Hermitian harmonic map is simply an ordinary harmonic map (divergence gap ~ 0)",
       VerdictKind::converged,
       R"([domain]
name = ctorus1
preset = conformal
extents = 32
[target]
name = hyperbolic_cylinder
[initial]
preset = perturbed-linear
winding = 0,0;1,0
amplitude = 0.05
seed = 3
[run]
name = kahler-reduction
record_every = 100
max_steps = 200000
)"},
      {"hermitian-existence",
       "non-Kaehler Hermitian metric on a complex 2-torus to the hyperbolic cylinder",
       "Hermitian harmonic maps into nonpositively curved targets exist in the homotopy class",
       VerdictKind::converged,
       R"([domain]
name = ctorus2
preset = nonkahler
extents = 8
[target]
name = hyperbolic_cylinder
[initial]
preset = perturbed-linear
winding = 0,0,0,0;1,0,0,0
amplitude = 0.05
seed = 13
[run]
name = hermitian-existence
record_every = 50
max_steps = 100000
)"},
      {"uniqueness-pair",
       "two perturbed initial maps into the hyperbolic cylinder in the null-homotopic class",
       "the affine harmonic map is unique in its homotopy class",
       VerdictKind::converged,
       R"([domain]
name = torus2d
preset = bumpy
extents = 32
[target]
name = hyperbolic_cylinder
[initial]
preset = perturbed-linear
winding = 0,0;0,0
amplitude = 0.2
seed = 3
pair_seed = 4
[run]
name = uniqueness-pair
record_every = 100
max_steps = 200000
)"},
      {"parallel-section-obstruction",
       "anisotropic Hopf torus onto the closed geodesic of the hyperbolic cylinder",
       "the flow converges unless g0^{-1}TN carries a nontrivial parallel section; here one exists and the flow circles",
       VerdictKind::circling,
       R"([domain]
name = hopf2d
preset = anisotropic
extents = 32,32
[target]
name = hyperbolic_cylinder
[initial]
preset = onto-geodesic
winding = 0,0;1,0
amplitude = 0.05
seed = 7
[run]
name = parallel-section-obstruction
record_every = 50
max_steps = 400000
)"},
      {"hyperbolic-contract",
       "perturbed point map from a diagonal affine torus into the hyperbolic plane",
       "null-homotopic maps into a contractible nonpositively curved target converge to a constant",
       VerdictKind::converged,
       R"([domain]
name = torus2d
preset = diag-sine
extents = 32
[target]
name = hyperbolic_plane
[initial]
preset = point
base = 0,1
amplitude = 0.2
seed = 9
[run]
name = hyperbolic-contract
record_every = 100
max_steps = 200000
)"},
  };
  return list;
}

const ScenarioInfo& find_scenario(const std::string& name) {
  for (const auto& s : scenarios())
    if (s.name == name) return s;
  fail(ErrorCode::config, "unknown scenario '" + name + "'");
}

std::map<std::string, double> golden_values(const ExperimentResult& result) {
  std::map<std::string, double> out;
  const RunVerdict& v = result.run.verdict;
  out["exit_code"] = exit_code(v.kind);
  out["steps"] = static_cast<double>(v.steps);
  out["t"] = v.t;
  out["final_sup_tension"] = v.final_sup_tension;
  out["parallel_residual"] = v.parallel_residual;
  out["monotonicity_violations"] = static_cast<double>(v.monotonicity_violations);
  out["homotopy_slope"] = v.homotopy_slope;
  for (const auto& [k, x] : result.evidence) out[k] = x;
  return out;
}

std::string default_golden_dir() {
  if (const char* dir = std::getenv("NDHARM_GOLDEN_DIR"); dir != nullptr && *dir != '\0') return dir;
#ifdef NDHARM_GOLDEN_DIR
  return NDHARM_GOLDEN_DIR;
#else
  return "goldens";
#endif
}

namespace {

// Tolerance used when blessing: absolute + relative part per key.
double bless_tolerance(const std::string& key, double value) {
  if (key == "exit_code" || key == "monotonicity_violations" || key == "pair_converged" ||
      key == "pair_monotonicity_violations")
    return 0.0;
  if (key == "steps") return std::max(2.0, 0.002 * value);
  if (key == "final_sup_tension" || key == "pair_final_sup_tension") return std::max(1e-9, 0.05 * std::abs(value));
  if (key == "divergence_gap") return std::max(1e-11, 10.0 * std::abs(value));
  return 1e-9 + 1e-6 * std::abs(value);
}

std::vector<const ScenarioInfo*> matching(const std::string& filter) {
  std::vector<const ScenarioInfo*> out;
  for (const auto& s : scenarios())
    if (filter.empty() || s.name.find(filter) != std::string::npos) out.push_back(&s);
  return out;
}

}  // namespace

int bless_goldens(const std::string& filter, const std::string& golden_dir, std::ostream& report) {
  const auto list = matching(filter);
  if (list.empty()) {
    report << "no scenario matches '" << filter << "'\n";
    return kExitVerifyEmpty;
  }
  fs::create_directories(golden_dir);
  for (const auto* s : list) {
    const auto cfg = parse_config_text(s->config);
    const auto res = run_experiment(cfg, RunOptions{false, {}});
    std::ofstream out(fs::path(golden_dir) / (s->name + ".golden"));
    if (!out) fail(ErrorCode::io, "cannot write golden for " + s->name);
    out << "[expect]\nverdict = " << to_string(s->expected) << "\n\n[values]\n";
    const auto values = golden_values(res);
    for (const auto& [k, x] : values) out << k << " = " << fmt(x) << '\n';
    out << "\n[tolerances]\n";
    for (const auto& [k, x] : values) out << k << " = " << fmt(bless_tolerance(k, x)) << '\n';
    report << "blessed " << s->name << " (" << to_string(res.run.verdict.kind) << ")\n";
  }
  return 0;
}

int verify_goldens(const std::string& filter, const std::string& golden_dir, std::ostream& report) {
  const auto list = matching(filter);
  if (list.empty()) {
    report << "no scenario matches '" << filter << "'\n";
    return kExitVerifyEmpty;
  }
  int failures = 0;
  for (const auto* s : list) {
    const fs::path path = fs::path(golden_dir) / (s->name + ".golden");
    pt::ptree golden;
    try {
      pt::read_ini(path.string(), golden);
    } catch (const pt::ini_parser_error& e) {
      report << "FAIL " << s->name << ": missing or unreadable golden " << path.string() << '\n';
      ++failures;
      continue;
    }
    const auto cfg = parse_config_text(s->config);
    const auto res = run_experiment(cfg, RunOptions{false, {}});
    const auto values = golden_values(res);
    std::vector<std::string> diffs;
    const std::string expected = golden.get<std::string>("expect.verdict", to_string(s->expected));
    if (expected != to_string(res.run.verdict.kind))
      diffs.push_back("verdict: expected " + expected + ", got " + to_string(res.run.verdict.kind));
    for (const auto& [key, node] : golden.get_child("values", pt::ptree())) {
      const double want = to_double(node.data(), key);
      const double tol = to_double(golden.get<std::string>("tolerances." + key, "0"), key);
      const auto it = values.find(key);
      if (it == values.end()) {
        diffs.push_back(key + ": not produced");
        continue;
      }
      const double got = it->second;
      if (!(std::abs(got - want) <= tol))
        diffs.push_back(key + ": golden " + fmt(want) + ", got " + fmt(got) + ", |diff| " + fmt(std::abs(got - want)) +
                        " > tol " + fmt(tol));
    }
    if (diffs.empty()) {
      report << "PASS " << s->name << " (" << to_string(res.run.verdict.kind) << ", " << res.run.verdict.steps
             << " steps)\n";
    } else {
      ++failures;
      report << "FAIL " << s->name << '\n';
      for (const auto& d : diffs) report << "    " << d << '\n';
    }
  }
  return failures == 0 ? 0 : kExitVerifyMismatch;
}

void dump_operator(const ExperimentConfig& config, std::ostream& os) {
  const auto op = scalar_operator_matrix(build_domain(config.domain));
  os << "# " << op.matrix.rows() << ' ' << op.matrix.cols() << ' ' << op.matrix.nonZeros() << '\n';
  for (const auto& w : op.warnings) os << "# warning: " << w << '\n';
  write_coordinate_text(op, os);
}

}  // namespace ndharm
