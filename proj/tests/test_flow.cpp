#include <doctest.h>

#include <cmath>
#include <random>

#include "ndharm/error.hpp"
#include "ndharm/experiment.hpp"
#include "ndharm/flow.hpp"
#include "support.hpp"

using namespace ndharm;
using namespace testing_support;

namespace {

MapField perturbed(const DomainStructure& dom, const TargetPtr& target, Winding w, double amp, std::uint64_t seed,
                   std::vector<double> base = {}) {
  InitialSpec spec;
  spec.preset = "perturbed-linear";
  spec.winding = std::move(w);
  spec.amplitude = amp;
  spec.seed = seed;
  spec.base = std::move(base);
  return build_initial(dom, target, spec);
}

double sup_distance(const MapField& a, const MapField& b) { return sup_abs(homotopy_distance_field(a, b)); }

}  // namespace

TEST_SUITE("flow") {

TEST_CASE("euler and midpoint steps follow their formulas") {
  const auto dom = build_domain({"torus2d", "skew", {}, {16}});
  const auto target = catalog_lookup("hyperbolic_plane");
  const auto f = perturbed(dom, target, {}, 0.2, 3, {0.0, 1.5});
  FlowState s{f, 0.25, 1e-4, 7, {}};
  const auto tau = tension(dom, f);

  const auto e = step(dom, s, Scheme::euler);
  CHECK(e.signal == StepSignal::ok);
  CHECK(e.state.steps == 8);
  CHECK(e.state.t == doctest::Approx(0.25 + 1e-4));
  for (std::size_t i = 0; i < tau.size(); ++i) CHECK(e.state.f.values()[i] == doctest::Approx(f.values()[i] + 1e-4 * tau[i]).epsilon(1e-15));

  MapField half = f;
  for (std::size_t i = 0; i < tau.size(); ++i) half.mutable_values()[i] += 0.5e-4 * tau[i];
  const auto tau_half = tension(dom, half);
  const auto m = step(dom, s, Scheme::midpoint);
  for (std::size_t i = 0; i < tau.size(); ++i)
    CHECK(m.state.f.values()[i] == doctest::Approx(f.values()[i] + 1e-4 * tau_half[i]).epsilon(1e-15));

  s.dt = 0.0;
  CHECK_THROWS_AS(step(dom, s), Error);
}

TEST_CASE("a step out of the chart is signalled") {
  const auto dom = build_domain({"torus1d", "identity", {}, {16}});
  const auto sphere = catalog_lookup("sphere", {{"threshold", 1.3}});
  std::vector<double> v(dom.size() * 2);
  for (std::size_t node = 0; node < dom.size(); ++node) {
    v[node * 2] = 1.25 * std::cos(kTwoPi * dom.grid().coordinate(node, 0));
    v[node * 2 + 1] = 1.25 * std::sin(kTwoPi * dom.grid().coordinate(node, 0));
  }
  // a loop north of the equator contracts toward the chart's point at infinity
  FlowState s{MapField(dom.grid(), sphere, v, {}), 0.0, 1.0, 0, {}};
  CHECK(step(dom, s).signal == StepSignal::chart_exit);
}

TEST_CASE("stable_dt examples") {
  const auto flat = build_domain({"torus2d", "identity", {}, {16}});
  const auto torus = catalog_lookup("flat_torus", {{"n", 2}});
  const auto f = perturbed(flat, torus, {{1, 0}, {0, 1}}, 0.1, 1);
  CHECK(stable_dt(flat, f) == doctest::Approx(0.9 / (4.0 * 256.0)));
  CHECK(stable_dt(flat, f, 0.5) == doctest::Approx(0.5 / (4.0 * 256.0)));

  PeriodicGrid g({16}, {1.0});
  std::vector<double> a(16, 2.0), b(16, 0.0);
  b[3] = -8.0;
  const DomainStructure drift(g, DomainKind::affine, a, b, std::vector<double>(16, 1.0));
  const MapField scalar(g, catalog_lookup("euclidean", {{"n", 1}}), std::vector<double>(16, 0.0), {});
  CHECK(stable_dt(drift, scalar) == doctest::Approx(0.9 / (4.0 * 256.0 + 8.0 * 16.0)));

  // curved targets only shrink the step
  const auto cyl = catalog_lookup("hyperbolic_cylinder");
  const auto fc = perturbed(flat, cyl, {{0, 0}, {1, 0}}, 0.2, 2);
  CHECK(stable_dt(flat, fc) < 0.9 / (4.0 * 256.0));
}

TEST_CASE("fit_line recovers exact lines") {
  const std::vector<double> x = {0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double t : x) y.push_back(-0.75 * t + 2.0);
  const auto fit = fit_line(x, y);
  CHECK(fit.slope == doctest::Approx(-0.75));
  CHECK(fit.intercept == doctest::Approx(2.0));
  CHECK(fit.r2 == doctest::Approx(1.0));
  CHECK(fit_line(std::vector<double>{1.0}, std::vector<double>{2.0}).slope == 0.0);
}

TEST_CASE("invalid flow configurations are rejected") {
  const auto dom = build_domain({"torus1d", "identity", {}, {16}});
  const auto f = perturbed(dom, catalog_lookup("circle"), {{1}}, 0.1, 1);
  FlowConfig cfg;
  cfg.window = 1;
  CHECK_THROWS_AS(run(dom, f, cfg), Error);
  cfg = FlowConfig{};
  cfg.tol_converged = 0.0;
  CHECK_THROWS_AS(run(dom, f, cfg), Error);
}

TEST_CASE("budget verdict when the step limit is reached") {
  const auto dom = build_domain({"torus1d", "identity", {}, {32}});
  FlowConfig cfg;
  cfg.max_steps = 10;
  const auto res = run(dom, perturbed(dom, catalog_lookup("circle"), {{1}}, 0.1, 1), cfg);
  CHECK(res.verdict.kind == VerdictKind::budget);
  CHECK(res.verdict.steps == 10);
  CHECK(res.state.steps == 10);
  CHECK(exit_code(res.verdict.kind) == 4);
}

TEST_CASE("circle heat flow converges to x + C with C fixed by the invariant measure") {
  const auto dom = build_domain({"torus1d", "coefficient-sine", {}, {64}});
  const auto circle = catalog_lookup("circle");
  const auto f0 = perturbed(dom, circle, {{1}}, 0.1, 11);
  FlowConfig cfg;
  cfg.max_steps = 400000;
  cfg.record_every = 200;
  const auto res = run(dom, f0, cfg);
  REQUIRE(res.verdict.kind == VerdictKind::converged);
  CHECK(res.verdict.final_sup_tension < cfg.tol_converged);
  CHECK(res.verdict.monotonicity_checked);
  CHECK(res.verdict.monotonicity_violations == 0);
  double num = 0.0, den = 0.0;
  for (std::size_t node = 0; node < dom.size(); ++node) {
    const double x = dom.grid().coordinate(node, 0);
    num += (f0.value(node, 0) - x) / dom.a(node, 0, 0);
    den += 1.0 / dom.a(node, 0, 0);
  }
  const double c = num / den;
  for (std::size_t node = 0; node < dom.size(); ++node)
    CHECK(res.state.f.value(node, 0) == doctest::Approx(dom.grid().coordinate(node, 0) + c).epsilon(1e-6).scale(1.0));
}

TEST_CASE("restarting from a converged map stays converged") {
  const auto dom = build_domain({"torus2d", "bumpy", {}, {16}});
  const auto cyl = catalog_lookup("hyperbolic_cylinder");
  FlowConfig cfg;
  const auto first = run(dom, perturbed(dom, cyl, {{0, 0}, {1, 0}}, 0.1, 3), cfg);
  REQUIRE(first.verdict.kind == VerdictKind::converged);
  FlowConfig again = cfg;
  again.tol_converged = 1e-300;
  again.max_steps = 1000;
  const auto second = run(dom, first.state.f, again);
  CHECK(second.verdict.kind == VerdictKind::budget);
  CHECK(second.verdict.final_sup_tension <= 2.0 * cfg.tol_converged);
  for (const auto& r : second.state.history) CHECK(std::sqrt(r.sup_speed) <= 2.0 * cfg.tol_converged);
  CHECK(sup_distance(second.state.f, first.state.f) < 1e-4);
}

TEST_CASE("maps winding once around the closed geodesic converge to the same limit") {
  const auto dom = build_domain({"torus2d", "bumpy", {}, {16}});
  const auto cyl = catalog_lookup("hyperbolic_cylinder");
  FlowConfig cfg;
  const auto a = run(dom, perturbed(dom, cyl, {{0, 0}, {1, 0}}, 0.2, 3), cfg);
  const auto b = run(dom, perturbed(dom, cyl, {{0, 0}, {1, 0}}, 0.2, 4), cfg);
  REQUIRE(a.verdict.kind == VerdictKind::converged);
  REQUIRE(b.verdict.kind == VerdictKind::converged);
  CHECK(a.verdict.monotonicity_violations == 0);
  CHECK(b.verdict.monotonicity_violations == 0);
  CHECK(sup_distance(a.state.f, b.state.f) <= 10.0 * cfg.tol_converged);
  // the common limit is the closed geodesic traversed linearly
  for (std::size_t node = 0; node < dom.size(); ++node) CHECK(std::abs(a.state.f.value(node, 0)) < 1e-5);
}

TEST_CASE("midpoint and euler reach the same limit") {
  const auto dom = build_domain({"torus2d", "diag-sine", {}, {16}});
  const auto plane = catalog_lookup("hyperbolic_plane");
  InitialSpec spec;
  spec.preset = "point";
  spec.base = {0.0, 1.0};
  spec.amplitude = 0.2;
  spec.seed = 9;
  const auto f0 = build_initial(dom, plane, spec);
  FlowConfig cfg;
  const auto e = run(dom, f0, cfg);
  cfg.scheme = Scheme::midpoint;
  const auto m = run(dom, f0, cfg);
  REQUIRE(e.verdict.kind == VerdictKind::converged);
  REQUIRE(m.verdict.kind == VerdictKind::converged);
  // constant limits are not unique; the two schemes pick points O(dt) apart
  CHECK(sup_distance(e.state.f, m.state.f) < 1e-3);
  CHECK(sup_abs(energy_density(dom, m.state.f)) < 1e-10);
  // a point-homotopic map into a negatively curved space contracts to a constant
  const auto eta = energy_density(dom, e.state.f);
  CHECK(sup_abs(eta) < 1e-10);
}

TEST_CASE("circling on the anisotropic Hopf torus drifts at the predicted speed") {
  const auto dom = build_domain({"hopf2d", "anisotropic", {}, {16, 16}});
  const auto circle = catalog_lookup("circle");
  const auto f0 = perturbed(dom, circle, {{1, 0}}, 0.05, 7);
  FlowConfig cfg;
  const auto res = run(dom, f0, cfg);
  REQUIRE(res.verdict.kind == VerdictKind::circling);
  REQUIRE(res.verdict.drift.size() == 1);
  // reference: the linear map s / log 2 with the same winding
  std::vector<double> v(dom.size());
  for (std::size_t node = 0; node < dom.size(); ++node) v[node] = dom.grid().coordinate(node, 0) / std::log(2.0);
  const auto predicted = drift_prediction(dom, MapField(dom.grid(), circle, v, {{1, 0}}));
  CHECK(res.verdict.drift[0] == doctest::Approx(predicted[0]).epsilon(1e-6));
  CHECK(res.verdict.drift_r2 > 0.999);
  CHECK(res.verdict.homotopy_r2 > 0.999);
  CHECK(res.verdict.monotonicity_violations == 0);
  CHECK(std::sqrt(res.state.history.back().sup_speed) > 10.0 * cfg.tol_converged);
}

TEST_CASE("snapshots are delivered at the requested cadence and at the end") {
  const auto dom = build_domain({"torus1d", "identity", {}, {16}});
  FlowConfig cfg;
  cfg.max_steps = 100;
  cfg.tol_converged = 1e-300;
  cfg.snapshot_every = 25;
  std::vector<long> seen;
  cfg.on_snapshot = [&](const FlowState& s) { seen.push_back(s.steps); };
  run(dom, perturbed(dom, catalog_lookup("circle"), {{1}}, 0.1, 1), cfg);
  CHECK(seen == std::vector<long>{25, 50, 75, 100, 100});
}

TEST_CASE("positively curved targets are not checked for monotonicity") {
  const auto dom = build_domain({"torus1d", "identity", {}, {16}});
  InitialSpec spec;
  spec.preset = "point";
  spec.amplitude = 0.1;
  const auto res = run(dom, build_initial(dom, catalog_lookup("sphere"), spec), FlowConfig{});
  CHECK_FALSE(res.verdict.monotonicity_checked);
  CHECK(res.verdict.kind == VerdictKind::converged);
}

}  // TEST_SUITE
