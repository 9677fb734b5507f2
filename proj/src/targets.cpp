#include "ndharm/targets.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

#include "ndharm/error.hpp"

namespace ndharm {

const char* to_string(CurvatureSign sign) {
  switch (sign) {
    case CurvatureSign::flat: return "flat";
    case CurvatureSign::nonpositive: return "nonpositive";
    case CurvatureSign::negative: return "negative";
    case CurvatureSign::positive: return "positive";
  }
  return "?";
}

void TargetManifold::curvature(std::span<const double> p, std::span<double> r) const {
  std::fill(r.begin(), r.end(), 0.0);
  (void)p;
}

bool TargetManifold::has_periodic_component() const {
  return std::any_of(periods_.begin(), periods_.end(), [](double t) { return t > 0.0; });
}

std::vector<int> TargetManifold::periodic_components() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < periods_.size(); ++i)
    if (periods_[i] > 0.0) out.push_back(static_cast<int>(i));
  return out;
}

void TargetManifold::constant_curvature(double k, std::span<const double> p, std::span<double> r) const {
  const int n = dim();
  std::array<double, 16> g{};
  metric(p, std::span<double>(g.data(), static_cast<std::size_t>(n * n)));
  auto G = [&](int a, int b) { return g[static_cast<std::size_t>(a * n + b)]; };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          r[static_cast<std::size_t>(((i * n + j) * n + a) * n + b)] = k * (G(i, a) * G(j, b) - G(i, b) * G(j, a));
}

namespace {

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void check_params(const std::map<std::string, double>& params, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : params) {
    if (!ok.count(key)) fail(ErrorCode::config, "unknown parameter '" + key + "' for target " + where);
    if (!std::isfinite(value)) fail(ErrorCode::config, "target parameter '" + key + "' is not finite");
  }
}

double shifted(std::span<const double> p, std::span<const int> hint, std::span<const double> periods, int i) {
  const auto k = static_cast<std::size_t>(i);
  double v = p[k];
  if (k < hint.size() && periods[k] > 0.0) v += hint[k] * periods[k];
  return v;
}

// Euclidean space, with optional periodic components (circle, flat torus).
class FlatTarget final : public TargetManifold {
 public:
  FlatTarget(std::string name, int n, double period) : name_(std::move(name)), n_(n) {
    periods_.assign(static_cast<std::size_t>(n), period);
  }
  std::string name() const override { return name_; }
  int dim() const override { return n_; }
  CurvatureSign curvature_sign() const override { return CurvatureSign::flat; }
  double curvature_bound() const override { return 0.0; }
  bool flat_chart() const override { return true; }
  void metric(std::span<const double>, std::span<double> g) const override {
    std::fill(g.begin(), g.end(), 0.0);
    for (int i = 0; i < n_; ++i) g[static_cast<std::size_t>(i * n_ + i)] = 1.0;
  }
  void christoffel(std::span<const double>, std::span<double> gamma) const override {
    std::fill(gamma.begin(), gamma.end(), 0.0);
  }
  double distance(std::span<const double> p, std::span<const double> q, std::span<const int> hint) const override {
    double acc = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double d = q[static_cast<std::size_t>(i)] - shifted(p, hint, periods_, i);
      acc += d * d;
    }
    return std::sqrt(acc);
  }

 private:
  std::string name_;
  int n_;
};

// Upper half-plane (u, v), v > 0, metric (du^2 + dv^2) / v^2.
class HyperbolicPlane final : public TargetManifold {
 public:
  HyperbolicPlane() { periods_ = {0.0, 0.0}; }
  std::string name() const override { return "hyperbolic_plane"; }
  int dim() const override { return 2; }
  CurvatureSign curvature_sign() const override { return CurvatureSign::negative; }
  double curvature_bound() const override { return 1.0; }
  bool in_chart(std::span<const double> p) const override { return p[1] > 0.0 && std::isfinite(p[0]) && std::isfinite(p[1]); }
  void metric(std::span<const double> p, std::span<double> g) const override {
    const double w = 1.0 / (p[1] * p[1]);
    g[0] = w; g[1] = 0.0; g[2] = 0.0; g[3] = w;
  }
  void christoffel(std::span<const double> p, std::span<double> gamma) const override {
    const double iv = 1.0 / p[1];
    std::fill(gamma.begin(), gamma.end(), 0.0);
    // index (i*2 + j)*2 + k ; u = 0, v = 1
    gamma[1] = gamma[2] = -iv;  // Gamma^u_uv
    gamma[4] = iv;              // Gamma^v_uu
    gamma[7] = -iv;             // Gamma^v_vv
  }
  void curvature(std::span<const double> p, std::span<double> r) const override { constant_curvature(-1.0, p, r); }
  double distance(std::span<const double> p, std::span<const double> q, std::span<const int>) const override {
    const double du = p[0] - q[0];
    const double dv = p[1] - q[1];
    return std::acosh(1.0 + (du * du + dv * dv) / (2.0 * p[1] * q[1]));
  }
};

// (u, theta) with metric du^2 + cosh^2(u) dtheta^2, theta periodic; the
// closed geodesic is u = 0.
class HyperbolicCylinder final : public TargetManifold {
 public:
  explicit HyperbolicCylinder(double period) { periods_ = {0.0, period}; }
  std::string name() const override { return "hyperbolic_cylinder"; }
  int dim() const override { return 2; }
  CurvatureSign curvature_sign() const override { return CurvatureSign::negative; }
  double curvature_bound() const override { return 1.0; }
  bool in_chart(std::span<const double> p) const override { return std::isfinite(p[0]) && std::isfinite(p[1]) && std::abs(p[0]) < 300.0; }
  void metric(std::span<const double> p, std::span<double> g) const override {
    const double c = std::cosh(p[0]);
    g[0] = 1.0; g[1] = 0.0; g[2] = 0.0; g[3] = c * c;
  }
  void christoffel(std::span<const double> p, std::span<double> gamma) const override {
    std::fill(gamma.begin(), gamma.end(), 0.0);
    gamma[3] = -std::cosh(p[0]) * std::sinh(p[0]);  // Gamma^u_{theta theta}
    gamma[5] = gamma[6] = std::tanh(p[0]);          // Gamma^theta_{u theta}
  }
  void curvature(std::span<const double> p, std::span<double> r) const override { constant_curvature(-1.0, p, r); }
  // Distance through the universal cover: Fermi coordinates about the
  // imaginary axis of the upper half-plane, z = e^theta (tanh u + i sech u).
  double distance(std::span<const double> p, std::span<const double> q, std::span<const int> hint) const override {
    const double tp = shifted(p, hint, periods_, 1);
    const double ep = std::exp(tp), eq = std::exp(q[1]);
    const double xp = ep * std::tanh(p[0]), yp = ep / std::cosh(p[0]);
    const double xq = eq * std::tanh(q[0]), yq = eq / std::cosh(q[0]);
    const double dx = xp - xq, dy = yp - yq;
    return std::acosh(1.0 + (dx * dx + dy * dy) / (2.0 * yp * yq));
  }
};

// Unit sphere in the stereographic chart from the north pole,
// metric 4 / (1 + |p|^2)^2 (dp1^2 + dp2^2).
class Sphere final : public TargetManifold {
 public:
  explicit Sphere(double threshold) : threshold_(threshold) { periods_ = {0.0, 0.0}; }
  std::string name() const override { return "sphere"; }
  int dim() const override { return 2; }
  CurvatureSign curvature_sign() const override { return CurvatureSign::positive; }
  double curvature_bound() const override { return 1.0; }
  bool in_chart(std::span<const double> p) const override {
    return std::isfinite(p[0]) && std::isfinite(p[1]) && std::hypot(p[0], p[1]) <= threshold_;
  }
  void metric(std::span<const double> p, std::span<double> g) const override {
    const double q = 1.0 + p[0] * p[0] + p[1] * p[1];
    const double w = 4.0 / (q * q);
    g[0] = w; g[1] = 0.0; g[2] = 0.0; g[3] = w;
  }
  // Conformal metric e^{2 lam}: Gamma^i_jk = d_j^i l_k + d_k^i l_j - d_jk l_i.
  void christoffel(std::span<const double> p, std::span<double> gamma) const override {
    const double q = 1.0 + p[0] * p[0] + p[1] * p[1];
    const double l[2] = {-2.0 * p[0] / q, -2.0 * p[1] / q};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int k = 0; k < 2; ++k)
          gamma[static_cast<std::size_t>((i * 2 + j) * 2 + k)] =
              (i == j ? l[k] : 0.0) + (i == k ? l[j] : 0.0) - (j == k ? l[i] : 0.0);
  }
  void curvature(std::span<const double> p, std::span<double> r) const override { constant_curvature(1.0, p, r); }
  double distance(std::span<const double> p, std::span<const double> q, std::span<const int>) const override {
    auto embed = [](std::span<const double> x) {
      const double s = x[0] * x[0] + x[1] * x[1];
      return std::array<double, 3>{2 * x[0] / (1 + s), 2 * x[1] / (1 + s), (s - 1) / (1 + s)};
    };
    const auto a = embed(p), b = embed(q);
    const double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    const double cx = a[1] * b[2] - a[2] * b[1];
    const double cy = a[2] * b[0] - a[0] * b[2];
    const double cz = a[0] * b[1] - a[1] * b[0];
    return std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), dot);
  }

 private:
  double threshold_;
};

}  // namespace

TargetPtr catalog_lookup(const std::string& name, const std::map<std::string, double>& params) {
  auto positive = [&](const std::string& key, double fallback) {
    const double v = param(params, key, fallback);
    if (!(v > 0.0)) fail(ErrorCode::config, "target parameter '" + key + "' must be positive");
    return v;
  };
  auto dimension = [&]() {
    const double n = param(params, "n", 2.0);
    if (n != std::floor(n) || n < 1 || n > 4) fail(ErrorCode::config, "target dimension n must be 1..4");
    return static_cast<int>(n);
  };
  if (name == "euclidean") {
    check_params(params, {"n"}, name);
    return std::make_shared<FlatTarget>(name, dimension(), 0.0);
  }
  if (name == "circle") {
    check_params(params, {"period"}, name);
    return std::make_shared<FlatTarget>(name, 1, positive("period", 1.0));
  }
  if (name == "flat_torus") {
    check_params(params, {"n", "period"}, name);
    return std::make_shared<FlatTarget>(name, dimension(), positive("period", 1.0));
  }
  if (name == "hyperbolic_plane") {
    check_params(params, {}, name);
    return std::make_shared<HyperbolicPlane>();
  }
  if (name == "hyperbolic_cylinder") {
    check_params(params, {"period"}, name);
    return std::make_shared<HyperbolicCylinder>(positive("period", 1.0));
  }
  if (name == "sphere") {
    check_params(params, {"threshold"}, name);
    return std::make_shared<Sphere>(positive("threshold", 1e3));
  }
  fail(ErrorCode::config, "unknown target '" + name + "'");
}

std::vector<std::string> target_names() {
  return {"euclidean", "circle", "flat_torus", "hyperbolic_plane", "hyperbolic_cylinder", "sphere"};
}

double geodesic_distance(const TargetManifold& target, std::span<const double> p, std::span<const double> q,
                         std::span<const int> hint) {
  if (!target.in_chart(p) || !target.in_chart(q)) fail(ErrorCode::chart, "distance endpoint outside chart");
  return target.distance(p, q, hint);
}

double vector_norm(const TargetManifold& target, std::span<const double> p, std::span<const double> v) {
  const int n = target.dim();
  std::array<double, 16> g{};
  target.metric(p, std::span<double>(g.data(), static_cast<std::size_t>(n * n)));
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) acc += g[static_cast<std::size_t>(i * n + j)] * v[static_cast<std::size_t>(i)] * v[static_cast<std::size_t>(j)];
  return std::sqrt(acc);
}

std::vector<double> parallel_transport(const TargetManifold& target, std::span<const double> curve,
                                       std::span<const double> v, int substeps) {
  const int n = target.dim();
  const auto un = static_cast<std::size_t>(n);
  if (curve.size() % un != 0 || curve.size() < un || v.size() != un)
    fail(ErrorCode::invalid_argument, "parallel transport: malformed curve or vector");
  if (substeps < 1) fail(ErrorCode::invalid_argument, "parallel transport needs at least one substep");
  const std::size_t points = curve.size() / un;

  std::vector<double> vec(v.begin(), v.end());
  std::vector<double> gamma(un * un * un), x(un), dx(un);
  std::array<std::vector<double>, 4> k;
  for (auto& kk : k) kk.resize(un);
  std::vector<double> tmp(un);

  auto rhs = [&](double sigma, std::size_t seg, const std::vector<double>& w, std::vector<double>& out) {
    for (std::size_t i = 0; i < un; ++i) {
      x[i] = curve[seg * un + i] + sigma * dx[i];
    }
    if (!target.in_chart(x)) fail(ErrorCode::chart, "parallel transport left the chart domain");
    target.christoffel(x, gamma);
    for (std::size_t i = 0; i < un; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < un; ++j)
        for (std::size_t l = 0; l < un; ++l) acc += gamma[(i * un + j) * un + l] * dx[j] * w[l];
      out[i] = -acc;
    }
  };

  for (std::size_t seg = 0; seg + 1 < points; ++seg) {
    for (std::size_t i = 0; i < un; ++i) dx[i] = curve[(seg + 1) * un + i] - curve[seg * un + i];
    const double step = 1.0 / substeps;
    for (int sub = 0; sub < substeps; ++sub) {
      const double s0 = sub * step;
      rhs(s0, seg, vec, k[0]);
      for (std::size_t i = 0; i < un; ++i) tmp[i] = vec[i] + 0.5 * step * k[0][i];
      rhs(s0 + 0.5 * step, seg, tmp, k[1]);
      for (std::size_t i = 0; i < un; ++i) tmp[i] = vec[i] + 0.5 * step * k[1][i];
      rhs(s0 + 0.5 * step, seg, tmp, k[2]);
      for (std::size_t i = 0; i < un; ++i) tmp[i] = vec[i] + step * k[2][i];
      rhs(s0 + step, seg, tmp, k[3]);
      for (std::size_t i = 0; i < un; ++i)
        vec[i] += step / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
    }
  }
  return vec;
}

}  // namespace ndharm
