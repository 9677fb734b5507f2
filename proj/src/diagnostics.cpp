#include "ndharm/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "ndharm/error.hpp"

namespace ndharm {

namespace {

void metric_at(const TargetManifold& target, std::span<const double> p, std::array<double, 16>& g) {
  const auto n = static_cast<std::size_t>(target.dim());
  if (!target.in_chart(p)) fail(ErrorCode::chart, "map value outside the target chart");
  target.metric(p, std::span<double>(g.data(), n * n));
}

// Centered derivative of a plain (non-lifted) per-node vector field.
double centered(const PeriodicGrid& grid, std::span<const double> v, int n, std::size_t node, int j, int i) {
  const auto un = static_cast<std::size_t>(n);
  const auto p = grid.neighbor(node, PeriodicGrid::plus_slot(j)).index;
  const auto m = grid.neighbor(node, PeriodicGrid::minus_slot(j)).index;
  return (v[p * un + static_cast<std::size_t>(i)] - v[m * un + static_cast<std::size_t>(i)]) / (2.0 * grid.spacing(j));
}

// (D_j v)^i for all j, i into dv[j * n + i].
void covariant_derivative(const DomainStructure& domain, const MapField& f, std::span<const double> grad,
                          std::span<const double> v, std::size_t node, std::vector<double>& gamma,
                          std::vector<double>& dv) {
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const int n = f.components();
  const auto un = static_cast<std::size_t>(n);
  const auto ud = static_cast<std::size_t>(d);
  const bool flat = f.target().flat_chart();
  if (!flat) f.target().christoffel(f.point(node), gamma);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < n; ++i) {
      double acc = centered(grid, v, n, node, j, i);
      if (!flat)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            acc += gamma[(static_cast<std::size_t>(i) * un + static_cast<std::size_t>(a)) * un + static_cast<std::size_t>(b)] *
                   grad[(node * ud + static_cast<std::size_t>(j)) * un + static_cast<std::size_t>(a)] *
                   v[node * un + static_cast<std::size_t>(b)];
      dv[static_cast<std::size_t>(j * n + i)] = acc;
    }
}

// A^{jk} g_ab X_j^a Y_k^b
double traced(const DomainStructure& domain, std::size_t node, int n, const std::array<double, 16>& g,
              std::span<const double> x, std::span<const double> y) {
  const int d = domain.axes();
  double acc = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      const double ajk = domain.a(node, j, k);
      if (ajk == 0.0) continue;
      double inner = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          inner += g[static_cast<std::size_t>(a * n + b)] * x[static_cast<std::size_t>(j * n + a)] *
                   y[static_cast<std::size_t>(k * n + b)];
      acc += ajk * inner;
    }
  return acc;
}

}  // namespace

std::vector<double> energy_density(const DomainStructure& domain, const MapField& f) {
  const auto grad = centered_gradient(domain, f);
  const int d = domain.axes();
  const int n = f.components();
  const auto block = static_cast<std::size_t>(d * n);
  std::vector<double> eta(f.nodes());
  std::array<double, 16> g{};
  for (std::size_t node = 0; node < f.nodes(); ++node) {
    metric_at(f.target(), f.point(node), g);
    const std::span<const double> df(grad.data() + node * block, block);
    eta[node] = 0.5 * traced(domain, node, n, g, df, df);
  }
  return eta;
}

std::vector<double> homotopy_distance_field(const MapField& f, const MapField& f0) {
  if (f.nodes() != f0.nodes() || f.components() != f0.components() || f.target().name() != f0.target().name())
    fail(ErrorCode::invalid_argument, "homotopy distance: maps live on different spaces");
  if (f.winding() != f0.winding()) fail(ErrorCode::invalid_argument, "homotopy distance: winding mismatch");
  std::vector<double> out(f.nodes());
  for (std::size_t node = 0; node < f.nodes(); ++node)
    out[node] = geodesic_distance(f.target(), f0.point(node), f.point(node));
  return out;
}

std::vector<double> squared_norms(const MapField& f, std::span<const double> v) {
  const int n = f.components();
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> out(f.nodes());
  std::array<double, 16> g{};
  for (std::size_t node = 0; node < f.nodes(); ++node) {
    metric_at(f.target(), f.point(node), g);
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        acc += g[static_cast<std::size_t>(a * n + b)] * v[node * un + static_cast<std::size_t>(a)] * v[node * un + static_cast<std::size_t>(b)];
    out[node] = acc;
  }
  return out;
}

std::vector<double> normalized(const MapField& f, std::span<const double> v) {
  const auto sq = squared_norms(f, v);
  const double top = std::sqrt(*std::max_element(sq.begin(), sq.end()));
  std::vector<double> out(v.begin(), v.end());
  if (top > 0.0)
    for (double& x : out) x /= top;
  return out;
}

double parallel_section_residual(const DomainStructure& domain, const MapField& f, std::span<const double> v) {
  const int d = domain.axes();
  const int n = f.components();
  const auto un = static_cast<std::size_t>(n);
  if (v.size() != f.nodes() * un) fail(ErrorCode::invalid_argument, "section does not match the map");
  const auto grad = centered_gradient(domain, f);
  std::vector<double> gamma(un * un * un), dv(static_cast<std::size_t>(d * n));
  std::array<double, 16> g{};
  double worst = 0.0;
  for (std::size_t node = 0; node < f.nodes(); ++node) {
    metric_at(f.target(), f.point(node), g);
    covariant_derivative(domain, f, grad, v, node, gamma, dv);
    worst = std::max(worst, traced(domain, node, n, g, dv, dv));
  }
  return std::sqrt(worst);
}

BochnerReport bochner_check(const DomainStructure& domain, const MapField& before, const MapField& now,
                            const MapField& after, double delta) {
  if (!(delta > 0.0)) fail(ErrorCode::invalid_argument, "bochner check needs a positive time spacing");
  const int d = domain.axes();
  const int n = now.components();
  const auto un = static_cast<std::size_t>(n);
  const auto ud = static_cast<std::size_t>(d);
  const PeriodicGrid& grid = domain.grid();

  const auto e_before = squared_norms(before, tension(domain, before));
  const auto e_after = squared_norms(after, tension(domain, after));
  const VectorField fdot = tension(domain, now);
  const auto e_now = squared_norms(now, fdot);

  // L e through the scalar flat-target tension (same stencils, upwinded B).
  const MapField scalar(grid, catalog_lookup("euclidean", {{"n", 1.0}}), e_now, {});
  const VectorField le = tension(domain, scalar);

  const auto grad = centered_gradient(domain, now);
  std::vector<double> gamma(un * un * un), dv(ud * un), r(un * un * un * un);
  std::array<double, 16> g{};

  BochnerReport rep;
  rep.residual.resize(now.nodes());
  rep.curvature_term.resize(now.nodes());
  rep.min_curvature_term = INFINITY;
  for (std::size_t node = 0; node < now.nodes(); ++node) {
    metric_at(now.target(), now.point(node), g);
    covariant_derivative(domain, now, grad, fdot, node, gamma, dv);
    const double kinetic = traced(domain, node, n, g, dv, dv);

    now.target().curvature(now.point(node), r);
    double curv = 0.0;
    const double* v = fdot.data() + node * un;
    const double* df = grad.data() + node * ud * un;
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) {
        const double ajk = domain.a(node, j, k);
        if (ajk == 0.0) continue;
        double acc = 0.0;
        for (int i = 0; i < n; ++i)
          for (int jj = 0; jj < n; ++jj)
            for (int kk = 0; kk < n; ++kk)
              for (int ll = 0; ll < n; ++ll)
                acc += r[static_cast<std::size_t>(((i * n + jj) * n + kk) * n + ll)] * v[i] * df[j * n + jj] * v[kk] *
                       df[k * n + ll];
        curv += ajk * acc;
      }
    const double lhs = le[node] - (e_after[node] - e_before[node]) / (2.0 * delta);
    rep.residual[node] = lhs - 2.0 * (kinetic - curv);
    rep.curvature_term[node] = -curv;
    rep.sup_residual = std::max(rep.sup_residual, std::abs(rep.residual[node]));
    rep.sup_lhs = std::max(rep.sup_lhs, std::abs(lhs));
    rep.min_curvature_term = std::min(rep.min_curvature_term, -curv);
  }
  return rep;
}

}  // namespace ndharm
