#include <doctest.h>

#include <cmath>
#include <random>

#include "ndharm/error.hpp"
#include "ndharm/targets.hpp"
#include "support.hpp"

using namespace ndharm;
using testing_support::uniform;

namespace {

std::vector<double> random_point(const TargetManifold& t, std::mt19937_64& rng) {
  std::vector<double> p(t.dim());
  for (auto& x : p) x = uniform(rng, -1.5, 1.5);
  if (t.name() == "hyperbolic_plane") p[1] = uniform(rng, 0.3, 3.0);
  return p;
}

std::vector<double> metric_at(const TargetManifold& t, const std::vector<double>& p) {
  std::vector<double> g(t.dim() * t.dim());
  t.metric(p, g);
  return g;
}

// Levi-Civita symbols from central differences of the metric.
std::vector<double> fd_christoffel(const TargetManifold& t, const std::vector<double>& p) {
  const int n = t.dim();
  const double h = 1e-5;
  std::vector<double> dg(n * n * n);  // [l][i][j] = d_l g_ij
  for (int l = 0; l < n; ++l) {
    auto pp = p, pm = p;
    pp[l] += h;
    pm[l] -= h;
    const auto gp = metric_at(t, pp), gm = metric_at(t, pm);
    for (int ij = 0; ij < n * n; ++ij) dg[l * n * n + ij] = (gp[ij] - gm[ij]) / (2 * h);
  }
  const auto g = metric_at(t, p);
  Eigen::MatrixXd gm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) gm(i, j) = g[i * n + j];
  const Eigen::MatrixXd gi = gm.inverse();
  std::vector<double> out(n * n * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double acc = 0.0;
        for (int l = 0; l < n; ++l)
          acc += gi(i, l) * (dg[j * n * n + l * n + k] + dg[k * n * n + l * n + j] - dg[l * n * n + j * n + k]);
        out[(i * n + j) * n + k] = 0.5 * acc;
      }
  return out;
}

// Gaussian curvature of an orthogonal 2D metric E du^2 + G dv^2 by nested
// central differences.
double fd_gauss_curvature(const TargetManifold& t, const std::vector<double>& p) {
  const double h = 1e-3;
  auto eg = [&](double u, double v) {
    const auto g = metric_at(t, {u, v});
    return std::array<double, 2>{g[0], g[3]};
  };
  auto gu_over = [&](double u, double v) {
    const auto c = eg(u, v);
    const double gu = (eg(u + h, v)[1] - eg(u - h, v)[1]) / (2 * h);
    return gu / std::sqrt(c[0] * c[1]);
  };
  auto ev_over = [&](double u, double v) {
    const auto c = eg(u, v);
    const double ev = (eg(u, v + h)[0] - eg(u, v - h)[0]) / (2 * h);
    return ev / std::sqrt(c[0] * c[1]);
  };
  const double u = p[0], v = p[1];
  const auto c = eg(u, v);
  const double term = (gu_over(u + h, v) - gu_over(u - h, v)) / (2 * h) + (ev_over(u, v + h) - ev_over(u, v - h)) / (2 * h);
  return -term / (2.0 * std::sqrt(c[0] * c[1]));
}

}  // namespace

TEST_SUITE("targets") {

TEST_CASE("catalog names and parameter validation") {
  for (const auto& name : target_names()) CHECK(catalog_lookup(name)->name() == name);
  CHECK(catalog_lookup("euclidean", {{"n", 3}})->dim() == 3);
  CHECK(catalog_lookup("flat_torus", {{"n", 2}, {"period", 2.0}})->periods()[1] == 2.0);
  CHECK_THROWS_AS(catalog_lookup("klein_bottle"), Error);
  CHECK_THROWS_AS(catalog_lookup("circle", {{"radius", 1.0}}), Error);
  CHECK_THROWS_AS(catalog_lookup("euclidean", {{"n", 1.5}}), Error);
  CHECK_THROWS_AS(catalog_lookup("circle", {{"period", -1.0}}), Error);
  CHECK(catalog_lookup("hyperbolic_cylinder")->periodic_components() == std::vector<int>{1});
  CHECK_FALSE(catalog_lookup("hyperbolic_plane")->has_periodic_component());
  CHECK(catalog_lookup("hyperbolic_plane")->curvature_sign() == CurvatureSign::negative);
  CHECK(catalog_lookup("sphere")->curvature_sign() == CurvatureSign::positive);
  CHECK(catalog_lookup("circle")->curvature_sign() == CurvatureSign::flat);
}

TEST_CASE("property: Christoffel symbols match finite differences of the metric") {
  std::mt19937_64 rng(3);
  for (const auto& name : target_names()) {
    const auto t = catalog_lookup(name);
    const int n = t->dim();
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = random_point(*t, rng);
      std::vector<double> gamma(n * n * n);
      t->christoffel(p, gamma);
      const auto ref = fd_christoffel(*t, p);
      CHECK_MESSAGE(testing_support::sup_diff(gamma, ref) < 1e-7 * (1.0 + testing_support::sup_abs(ref)), name);
    }
  }
}

TEST_CASE("property: curvature tensor matches the Gaussian curvature of the metric") {
  std::mt19937_64 rng(5);
  for (const char* name : {"hyperbolic_plane", "hyperbolic_cylinder", "sphere"}) {
    const auto t = catalog_lookup(name);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = random_point(*t, rng);
      std::vector<double> r(16);
      t->curvature(p, r);
      const auto g = metric_at(*t, p);
      const double k = r[0 * 8 + 1 * 4 + 0 * 2 + 1] / (g[0] * g[3] - g[1] * g[2]);
      CHECK_MESSAGE(k == doctest::Approx(fd_gauss_curvature(*t, p)).epsilon(1e-4), name);
      if (t->curvature_sign() == CurvatureSign::negative) CHECK(k < 0.0);
      if (t->curvature_sign() == CurvatureSign::positive) CHECK(k > 0.0);
      CHECK(std::abs(k) <= t->curvature_bound() + 1e-12);
    }
  }
  const auto flat = catalog_lookup("flat_torus", {{"n", 3}});
  std::vector<double> r(81, 1.0);
  flat->curvature(std::vector<double>{0.1, 0.2, 0.3}, r);
  CHECK(testing_support::sup_abs(r) == 0.0);
}

TEST_CASE("distance: closed-form examples") {
  const auto plane = catalog_lookup("hyperbolic_plane");
  CHECK(geodesic_distance(*plane, std::vector<double>{0, 1}, std::vector<double>{0, std::exp(1.0)}) ==
        doctest::Approx(1.0).epsilon(1e-14));
  // horizontal points at height 1: 2 asinh(|du| / 2)
  CHECK(geodesic_distance(*plane, std::vector<double>{0, 1}, std::vector<double>{3, 1}) ==
        doctest::Approx(2.0 * std::asinh(1.5)).epsilon(1e-14));

  const auto cyl = catalog_lookup("hyperbolic_cylinder", {{"period", 1.0}});
  CHECK(geodesic_distance(*cyl, std::vector<double>{0, 0.1}, std::vector<double>{0, 0.4}) ==
        doctest::Approx(0.3).epsilon(1e-13));
  CHECK(geodesic_distance(*cyl, std::vector<double>{-0.5, 0.3}, std::vector<double>{0.7, 0.3}) ==
        doctest::Approx(1.2).epsilon(1e-13));
  const int back[2] = {0, -1};
  CHECK(geodesic_distance(*cyl, std::vector<double>{0, 0.9}, std::vector<double>{0, 0.1}, back) ==
        doctest::Approx(0.2).epsilon(1e-12));
  CHECK_THROWS_AS(geodesic_distance(*cyl, std::vector<double>{400, 0}, std::vector<double>{0, 0}), Error);

  const auto sphere = catalog_lookup("sphere");
  CHECK(geodesic_distance(*sphere, std::vector<double>{0, 0}, std::vector<double>{1, 0}) ==
        doctest::Approx(M_PI / 2).epsilon(1e-14));
  const auto circle = catalog_lookup("circle", {{"period", 2.0}});
  const int wrap[1] = {1};
  CHECK(geodesic_distance(*circle, std::vector<double>{0.1}, std::vector<double>{1.9}, wrap) ==
        doctest::Approx(0.2).epsilon(1e-13));
}

TEST_CASE("property: distance is symmetric, zero on the diagonal and satisfies the triangle inequality") {
  std::mt19937_64 rng(17);
  for (const auto& name : target_names()) {
    const auto t = catalog_lookup(name);
    for (int trial = 0; trial < 100; ++trial) {
      const auto p = random_point(*t, rng), q = random_point(*t, rng), r = random_point(*t, rng);
      const double pq = geodesic_distance(*t, p, q), qr = geodesic_distance(*t, q, r),
                   pr = geodesic_distance(*t, p, r);
      CHECK(pq == doctest::Approx(geodesic_distance(*t, q, p)).epsilon(1e-10));
      CHECK(geodesic_distance(*t, p, p) < 1e-7);
      CHECK(pr <= pq + qr + 1e-10);
    }
  }
}

TEST_CASE("distance agrees with the length of short coordinate segments") {
  std::mt19937_64 rng(23);
  for (const char* name : {"hyperbolic_plane", "hyperbolic_cylinder", "sphere"}) {
    const auto t = catalog_lookup(name);
    for (int trial = 0; trial < 20; ++trial) {
      const auto p = random_point(*t, rng);
      std::vector<double> dir = {uniform(rng, -1, 1), uniform(rng, -1, 1)};
      const double eps = 1e-5;
      std::vector<double> q = {p[0] + eps * dir[0], p[1] + eps * dir[1]};
      const double expect = eps * vector_norm(*t, p, dir);
      CHECK(geodesic_distance(*t, p, q) == doctest::Approx(expect).epsilon(1e-4));
    }
  }
}

TEST_CASE("parallel transport: closed-form examples") {
  const auto plane = catalog_lookup("hyperbolic_plane");
  // vertical geodesic: horizontal vectors scale with height
  std::vector<double> curve;
  for (int i = 0; i <= 10; ++i) {
    curve.push_back(0.0);
    curve.push_back(1.0 + 0.1 * i);
  }
  const auto v = parallel_transport(*plane, curve, std::vector<double>{1.0, 0.0});
  CHECK(v[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(std::abs(v[1]) < 1e-12);

  // closed geodesic of the cylinder: both frame vectors return unchanged
  const auto cyl = catalog_lookup("hyperbolic_cylinder");
  const std::vector<double> loop = {0, 0, 0, 0.25, 0, 0.5, 0, 0.75, 0, 1.0};
  const auto w = parallel_transport(*cyl, loop, std::vector<double>{0.3, 0.7});
  CHECK(w[0] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(0.7).epsilon(1e-12));

  CHECK_THROWS_AS(parallel_transport(*plane, std::vector<double>{0, 1, 0}, std::vector<double>{1, 0}), Error);
  CHECK_THROWS_AS(parallel_transport(*plane, std::vector<double>{0, 1, 0, -1}, std::vector<double>{1, 0}), Error);
}

TEST_CASE("property: parallel transport preserves the norm") {
  std::mt19937_64 rng(29);
  for (const auto& name : target_names()) {
    const auto t = catalog_lookup(name);
    const int n = t->dim();
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> curve;
      auto p = random_point(*t, rng);
      for (int s = 0; s < 30; ++s) {
        curve.insert(curve.end(), p.begin(), p.end());
        for (int i = 0; i < n; ++i) p[i] += uniform(rng, -0.05, 0.05);
      }
      std::vector<double> v(n);
      for (auto& x : v) x = uniform(rng, -1, 1);
      const auto w = parallel_transport(*t, curve, v);
      const std::span<const double> last(curve.data() + curve.size() - n, n);
      CHECK_MESSAGE(vector_norm(*t, last, w) == doctest::Approx(vector_norm(*t, {curve.data(), static_cast<std::size_t>(n)}, v)).epsilon(1e-8), name);
    }
  }
}

}  // TEST_SUITE
