#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ndharm/operators.hpp"

namespace testing_support {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
inline double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * unit(rng); }

/// f^i(y) = c_i + slope_i . y + sum_m amp sin(k . y + phase), analytic
/// derivatives in the grid's computational coordinates.
struct TrigMap {
  struct Mode {
    std::vector<double> k;  // angular wave numbers per axis
    double amp = 0.0;
    double phase = 0.0;
  };
  int n = 1;
  int d = 1;
  std::vector<double> offset;              // n
  std::vector<std::vector<double>> slope;  // n x d
  std::vector<std::vector<Mode>> modes;    // n

  double value(int i, const std::vector<double>& y) const {
    double v = offset[i];
    for (int a = 0; a < d; ++a) v += slope[i][a] * y[a];
    for (const auto& m : modes[i]) v += m.amp * std::sin(dot(m.k, y) + m.phase);
    return v;
  }
  double grad(int i, int a, const std::vector<double>& y) const {
    double v = slope[i][a];
    for (const auto& m : modes[i]) v += m.amp * m.k[a] * std::cos(dot(m.k, y) + m.phase);
    return v;
  }
  double hess(int i, int a, int b, const std::vector<double>& y) const {
    double v = 0.0;
    for (const auto& m : modes[i]) v -= m.amp * m.k[a] * m.k[b] * std::sin(dot(m.k, y) + m.phase);
    return v;
  }

  static double dot(const std::vector<double>& k, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t a = 0; a < k.size(); ++a) s += k[a] * y[a];
    return s;
  }
};

/// Random smooth periodic map with the given winding; wave numbers up to
/// `kmax` per axis, all components perturbed by `amp`.
inline TrigMap random_trig_map(const ndharm::PeriodicGrid& grid, const ndharm::TargetManifold& target,
                               const ndharm::Winding& winding, std::vector<double> base, double amp,
                               std::mt19937_64& rng, int nmodes = 3, int kmax = 2) {
  TrigMap m;
  m.n = target.dim();
  m.d = grid.axes();
  m.offset = std::move(base);
  m.offset.resize(static_cast<std::size_t>(m.n), 0.0);
  const auto periods = target.periods();
  m.slope.assign(m.n, std::vector<double>(m.d, 0.0));
  m.modes.resize(m.n);
  for (int i = 0; i < m.n; ++i) {
    for (int a = 0; a < m.d; ++a) {
      const int w = winding.empty() ? 0 : winding[i][a];
      m.slope[i][a] = w * periods[i] / grid.period(a);
    }
    for (int q = 0; q < nmodes; ++q) {
      TrigMap::Mode mode;
      mode.k.resize(m.d);
      bool nonzero = false;
      while (!nonzero) {
        for (int a = 0; a < m.d; ++a) {
          const int k = static_cast<int>(std::floor(unit(rng) * (2 * kmax + 1))) - kmax;
          nonzero |= k != 0;
          mode.k[a] = kTwoPi * k / grid.period(a);
        }
      }
      mode.amp = amp * uniform(rng, -1.0, 1.0);
      mode.phase = uniform(rng, 0.0, kTwoPi);
      m.modes[i].push_back(mode);
    }
  }
  return m;
}

inline std::vector<double> node_coords(const ndharm::PeriodicGrid& grid, std::size_t node) {
  std::vector<double> y(grid.axes());
  for (int a = 0; a < grid.axes(); ++a) y[a] = grid.coordinate(node, a);
  return y;
}

inline ndharm::MapField sample(const ndharm::PeriodicGrid& grid, const ndharm::TargetPtr& target, const TrigMap& m,
                               const ndharm::Winding& winding) {
  std::vector<double> v(grid.size() * m.n);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const auto y = node_coords(grid, node);
    for (int i = 0; i < m.n; ++i) v[node * m.n + i] = m.value(i, y);
  }
  return ndharm::MapField(grid, target, std::move(v), winding);
}

/// Continuum tension A^{jk}(d_jk f + Gamma(f)(d_j f, d_k f)) + B^j d_j f with
/// exact derivatives at the nodes.
inline std::vector<double> exact_tension(const ndharm::DomainStructure& domain, const ndharm::TargetManifold& target,
                                         const TrigMap& m) {
  const auto& grid = domain.grid();
  const int n = m.n, d = m.d;
  std::vector<double> out(grid.size() * n), gamma(n * n * n), p(n);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const auto y = node_coords(grid, node);
    for (int i = 0; i < n; ++i) p[i] = m.value(i, y);
    target.christoffel(p, gamma);
    for (int i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        acc += domain.b(node, j) * m.grad(i, j, y);
        for (int k = 0; k < d; ++k) {
          double inner = m.hess(i, j, k, y);
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) inner += gamma[(i * n + a) * n + b] * m.grad(a, j, y) * m.grad(b, k, y);
          acc += domain.a(node, j, k) * inner;
        }
      }
      out[node * n + i] = acc;
    }
  }
  return out;
}

inline double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

inline double sup_abs(const std::vector<double>& a) {
  double s = 0.0;
  for (double x : a) s = std::max(s, std::abs(x));
  return s;
}

}  // namespace testing_support
