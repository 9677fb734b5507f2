#include "ndharm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "ndharm/error.hpp"

namespace ndharm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string node_text(const PeriodicGrid& grid, std::size_t node) {
  const MultiIndex idx = grid.multi_index(node);
  std::ostringstream os;
  os << "node " << node << " (";
  for (int a = 0; a < grid.axes(); ++a) os << (a ? "," : "") << idx[a];
  os << ")";
  return os.str();
}

Eigen::VectorXd node_point(const PeriodicGrid& grid, std::size_t node) {
  const MultiIndex idx = grid.multi_index(node);
  Eigen::VectorXd x(grid.axes());
  for (int a = 0; a < grid.axes(); ++a) x[a] = idx[a] * grid.spacing(a);
  return x;
}

bool is_spd(const Eigen::MatrixXd& m) {
  if (!m.allFinite()) return false;
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
    return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 0.0;
}

double param(const std::map<std::string, double>& params, const std::string& key, double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

void check_params(const std::map<std::string, double>& params, std::initializer_list<const char*> allowed,
                  const std::string& where) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : params) {
    if (!ok.count(key)) fail(ErrorCode::config, "unknown parameter '" + key + "' for " + where);
    if (!std::isfinite(value)) fail(ErrorCode::config, "parameter '" + key + "' is not finite");
  }
}

// Push a cometric and first-order part through y = y(x) with jacobian J and
// second derivatives H.
void push_forward(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::MatrixXd& jac,
                  const std::vector<Eigen::MatrixXd>& hess, Eigen::MatrixXd& a_out, Eigen::VectorXd& b_out) {
  a_out = jac * a * jac.transpose();
  a_out = 0.5 * (a_out + a_out.transpose()).eval();
  b_out = jac * b;
  for (std::size_t j = 0; j < hess.size(); ++j) b_out[static_cast<Eigen::Index>(j)] += (a.cwiseProduct(hess[j])).sum();
}

}  // namespace

DomainStructure::DomainStructure(PeriodicGrid grid, DomainKind kind, std::vector<double> a,
                                 std::vector<double> b, std::vector<double> metric_det, std::string label)
    : grid_(std::move(grid)),
      kind_(kind),
      a_(std::move(a)),
      b_(std::move(b)),
      metric_det_(std::move(metric_det)),
      label_(std::move(label)) {
  const auto n = grid_.size();
  const auto d = static_cast<std::size_t>(grid_.axes());
  if (a_.size() != n * d * d || b_.size() != n * d || metric_det_.size() != n)
    fail(ErrorCode::invalid_argument, "coefficient arrays do not match the grid");
  for (std::size_t node = 0; node < n; ++node) {
    if (!is_spd(a_matrix(node)))
      fail(ErrorCode::invalid_argument,
           "second-order coefficients not symmetric positive definite at " + node_text(grid_, node));
    if (!b_vector(node).allFinite() || !(metric_det_[node] > 0.0))
      fail(ErrorCode::invalid_argument, "invalid lower-order data at " + node_text(grid_, node));
  }
}

Eigen::MatrixXd DomainStructure::a_matrix(std::size_t node) const {
  const int d = axes();
  Eigen::MatrixXd m(d, d);
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) m(j, k) = a(node, j, k);
  return m;
}

Eigen::VectorXd DomainStructure::b_vector(std::size_t node) const {
  Eigen::VectorXd v(axes());
  for (int j = 0; j < axes(); ++j) v[j] = b(node, j);
  return v;
}

bool DomainStructure::first_order_free() const {
  return std::all_of(b_.begin(), b_.end(), [](double v) { return v == 0.0; });
}

ChartChange identity_change(int dims) {
  return affine_change(Eigen::MatrixXd::Identity(dims, dims), Eigen::VectorXd::Zero(dims));
}

ChartChange affine_change(const Eigen::MatrixXd& m, const Eigen::VectorXd& shift) {
  const auto d = m.rows();
  return ChartChange{
      [m, shift](const Eigen::VectorXd& x) -> Eigen::VectorXd { return m * x + shift; },
      [m](const Eigen::VectorXd&) -> Eigen::MatrixXd { return m; },
      [d](const Eigen::VectorXd&) {
        return std::vector<Eigen::MatrixXd>(static_cast<std::size_t>(d), Eigen::MatrixXd::Zero(d, d));
      }};
}

DomainStructure build_affine_torus(const MetricField& metric, const PeriodicGrid& grid, std::string label) {
  const int d = grid.axes();
  const auto n = grid.size();
  std::vector<double> a(n * static_cast<std::size_t>(d * d));
  std::vector<double> b(n * static_cast<std::size_t>(d), 0.0);
  std::vector<double> det(n);
  for (std::size_t node = 0; node < n; ++node) {
    const Eigen::MatrixXd g = metric(node_point(grid, node));
    if (g.rows() != d || g.cols() != d) fail(ErrorCode::invalid_argument, "metric has wrong dimension");
    if (!is_spd(g))
      fail(ErrorCode::invalid_argument, "metric not symmetric positive definite at " + node_text(grid, node));
    Eigen::MatrixXd inv = g.inverse();
    inv = 0.5 * (inv + inv.transpose()).eval();
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) a[node * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(j * d + k)] = inv(j, k);
    det[node] = g.determinant();
  }
  return DomainStructure(grid, DomainKind::affine, std::move(a), std::move(b), std::move(det), std::move(label));
}

DomainStructure build_hopf_torus(const MetricField& metric, const PeriodicGrid& grid, std::string label) {
  if (grid.axes() != 2) fail(ErrorCode::invalid_argument, "Hopf torus grid must be two-dimensional");
  if (std::abs(grid.period(0) - std::log(2.0)) > 1e-12 || std::abs(grid.period(1) - kTwoPi) > 1e-12)
    fail(ErrorCode::invalid_argument, "Hopf torus grid periods must be (log 2, 2 pi)");

  // Sampled check of 4 * metric(2x) == metric(x).
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 9; ++j) {
      const double r = 0.37 + 0.41 * i;
      const double phi = 0.13 + 0.71 * j;
      Eigen::VectorXd x(2);
      x << r * std::cos(phi), r * std::sin(phi);
      const Eigen::MatrixXd g1 = metric(x);
      const Eigen::MatrixXd g2 = 4.0 * metric(2.0 * x);
      if ((g1 - g2).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + g1.cwiseAbs().maxCoeff()))
        fail(ErrorCode::invalid_argument, "Hopf metric is not invariant under x -> 2x");
    }

  const auto n = grid.size();
  std::vector<double> a(n * 4);
  std::vector<double> b(n * 2);
  std::vector<double> det(n);
  for (std::size_t node = 0; node < n; ++node) {
    const MultiIndex idx = grid.multi_index(node);
    const double s = idx[0] * grid.spacing(0);
    const double phi = idx[1] * grid.spacing(1);
    const double r = std::exp(s);
    const double x1 = r * std::cos(phi);
    const double x2 = r * std::sin(phi);
    const double r2 = r * r;
    const double r4 = r2 * r2;
    Eigen::VectorXd x(2);
    x << x1, x2;
    const Eigen::MatrixXd g = metric(x);
    if (!is_spd(g))
      fail(ErrorCode::invalid_argument, "metric not symmetric positive definite at " + node_text(grid, node));
    const Eigen::MatrixXd cometric = g.inverse();

    Eigen::MatrixXd jac(2, 2);
    jac << x1 / r2, x2 / r2, -x2 / r2, x1 / r2;
    std::vector<Eigen::MatrixXd> hess(2, Eigen::MatrixXd(2, 2));
    hess[0] << (r2 - 2 * x1 * x1) / r4, -2 * x1 * x2 / r4, -2 * x1 * x2 / r4, (r2 - 2 * x2 * x2) / r4;
    hess[1] << 2 * x1 * x2 / r4, (x2 * x2 - x1 * x1) / r4, (x2 * x2 - x1 * x1) / r4, -2 * x1 * x2 / r4;

    Eigen::MatrixXd a_node;
    Eigen::VectorXd b_node;
    push_forward(cometric, Eigen::VectorXd::Zero(2), jac, hess, a_node, b_node);
    for (int j = 0; j < 2; ++j) {
      b[node * 2 + static_cast<std::size_t>(j)] = b_node[j];
      for (int k = 0; k < 2; ++k) a[node * 4 + static_cast<std::size_t>(2 * j + k)] = a_node(j, k);
    }
    det[node] = 1.0 / a_node.determinant();
  }
  return DomainStructure(grid, DomainKind::affine, std::move(a), std::move(b), std::move(det), std::move(label));
}

DomainStructure build_hermitian_torus(const HermitianMetricField& metric, const PeriodicGrid& grid,
                                      std::string label) {
  const int d = grid.axes();
  if (d != 2 && d != 4) fail(ErrorCode::invalid_argument, "complex torus must have complex dimension 1 or 2");
  const int m = d / 2;
  const auto n = grid.size();
  std::vector<double> a(n * static_cast<std::size_t>(d * d));
  std::vector<double> b(n * static_cast<std::size_t>(d), 0.0);
  std::vector<double> det(n);
  for (std::size_t node = 0; node < n; ++node) {
    const Eigen::MatrixXcd h = metric(node_point(grid, node));
    if (h.rows() != m || h.cols() != m) fail(ErrorCode::invalid_argument, "Hermitian metric has wrong dimension");
    if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + h.cwiseAbs().maxCoeff()))
      fail(ErrorCode::invalid_argument, "metric not Hermitian at " + node_text(grid, node));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
      fail(ErrorCode::invalid_argument, "metric not positive at " + node_text(grid, node));

    // gamma^{a bbar} gamma_{c bbar} = delta^a_c  =>  cometric = (H^{-1})^T.
    const Eigen::MatrixXcd co = h.inverse().transpose();
    Eigen::MatrixXd blk(d, d);
    for (int al = 0; al < m; ++al)
      for (int be = 0; be < m; ++be) {
        const double p = 0.25 * co(al, be).real();
        const double q = 0.25 * co(al, be).imag();
        blk(al, be) = p;
        blk(m + al, m + be) = p;
        // d_{x_al} d_{y_be} and d_{y_be} d_{x_al} share the total -Q/2.
        blk(al, m + be) = -q;
        blk(m + be, al) = -q;
      }
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k) a[node * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(j * d + k)] = blk(j, k);
    // Underlying Riemannian metric has cometric 4A.
    det[node] = 1.0 / (4.0 * blk).determinant();
  }
  return DomainStructure(grid, DomainKind::hermitian, std::move(a), std::move(b), std::move(det),
                         std::move(label));
}

DomainStructure transform_operator(const DomainStructure& domain, const ChartChange& change) {
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const auto n = grid.size();
  std::vector<double> a(n * static_cast<std::size_t>(d * d));
  std::vector<double> b(n * static_cast<std::size_t>(d));
  std::vector<double> det(n);
  for (std::size_t node = 0; node < n; ++node) {
    const Eigen::VectorXd x = node_point(grid, node);
    const Eigen::MatrixXd jac = change.jacobian(x);
    const double jdet = jac.determinant();
    if (!std::isfinite(jdet) || std::abs(jdet) < 1e-14 * std::max(1.0, jac.cwiseAbs().maxCoeff()))
      fail(ErrorCode::invalid_argument, "singular coordinate change at " + node_text(grid, node));
    Eigen::MatrixXd a_node;
    Eigen::VectorXd b_node;
    push_forward(domain.a_matrix(node), domain.b_vector(node), jac, change.hessian(x), a_node, b_node);
    for (int j = 0; j < d; ++j) {
      b[node * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] = b_node[j];
      for (int k = 0; k < d; ++k) a[node * static_cast<std::size_t>(d * d) + static_cast<std::size_t>(j * d + k)] = a_node(j, k);
    }
    det[node] = domain.metric_det(node) / (jdet * jdet);
  }
  return DomainStructure(grid, domain.kind(), std::move(a), std::move(b), std::move(det), domain.label());
}

double apply_coefficients(const DomainStructure& domain, std::size_t node, std::span<const double> gradient,
                          std::span<const double> hessian) {
  const int d = domain.axes();
  double acc = 0.0;
  for (int j = 0; j < d; ++j) {
    acc += domain.b(node, j) * gradient[static_cast<std::size_t>(j)];
    for (int k = 0; k < d; ++k) acc += domain.a(node, j, k) * hessian[static_cast<std::size_t>(j * d + k)];
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Catalog

MetricField torus_metric(const std::string& name, const std::string& preset,
                         const std::map<std::string, double>& params) {
  const std::string where = name + "/" + preset;
  if (name == "torus1d") {
    if (preset == "identity") {
      check_params(params, {}, where);
      return [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(1, 1); };
    }
    if (preset == "sine") {
      check_params(params, {"base", "amp"}, where);
      const double base = param(params, "base", 2.0);
      const double amp = param(params, "amp", 1.0);
      return [base, amp](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g(1, 1);
        g(0, 0) = base + amp * std::sin(kTwoPi * x[0]);
        return g;
      };
    }
    if (preset == "coefficient-sine") {
      // operator coefficient A = base + amp sin 2 pi x
      check_params(params, {"base", "amp"}, where);
      const double base = param(params, "base", 2.0);
      const double amp = param(params, "amp", 1.0);
      return [base, amp](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g(1, 1);
        g(0, 0) = 1.0 / (base + amp * std::sin(kTwoPi * x[0]));
        return g;
      };
    }
  } else if (name == "torus2d") {
    if (preset == "identity") {
      check_params(params, {}, where);
      return [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(2, 2); };
    }
    if (preset == "diag-sine") {
      check_params(params, {"amp"}, where);
      const double amp = param(params, "amp", 0.5);
      return [amp](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Identity(2, 2);
        g(0, 0) = 1.0 + amp * std::sin(kTwoPi * x[0]);
        return g;
      };
    }
    if (preset == "bumpy") {
      check_params(params, {"amp"}, where);
      const double amp = param(params, "amp", 0.5);
      return [amp](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
        g(0, 0) = 1.0 + amp * std::cos(kTwoPi * x[0]);
        g(1, 1) = 1.0 + amp * std::cos(kTwoPi * x[1]);
        return g;
      };
    }
    if (preset == "skew") {
      check_params(params, {"shear"}, where);
      const double shear = param(params, "shear", 0.4);
      return [shear](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g(2, 2);
        g(0, 0) = 1.5 + 0.5 * std::cos(kTwoPi * x[1]);
        g(1, 1) = 1.5 + 0.5 * std::sin(kTwoPi * x[0]);
        g(0, 1) = g(1, 0) = shear * std::sin(kTwoPi * (x[0] + x[1]));
        return g;
      };
    }
  }
  fail(ErrorCode::config, "unknown metric preset '" + preset + "' for domain " + name);
}

MetricField hopf_metric(const std::string& preset, const std::map<std::string, double>& params) {
  const std::string where = "hopf2d/" + preset;
  const double log2 = std::log(2.0);
  if (preset == "conformal") {
    check_params(params, {"scale"}, where);
    const double scale = param(params, "scale", 1.0);
    return [scale](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
      return Eigen::MatrixXd::Identity(2, 2) * (scale / x.squaredNorm());
    };
  }
  // Both anisotropic presets share the form e^{2u} M(phi) / |x|^2 with
  // M^{-1} = (1 - eps) I + 2 eps e e^T along a frame e at angle phi + delta.
  double eps0 = 0.3, eps1 = 0.0, delta = 0.0, uamp = 0.3;
  if (preset == "anisotropic") {
    check_params(params, {"eps", "uamp"}, where);
    eps0 = param(params, "eps", 0.3);
    uamp = param(params, "uamp", 0.3);
  } else if (preset == "generic") {
    check_params(params, {"eps0", "eps1", "delta", "uamp"}, where);
    eps0 = param(params, "eps0", 0.3);
    eps1 = param(params, "eps1", 0.1);
    delta = param(params, "delta", 0.4);
    uamp = param(params, "uamp", 0.2);
  } else {
    fail(ErrorCode::config, "unknown metric preset '" + preset + "' for domain hopf2d");
  }
  if (std::abs(eps0) + std::abs(eps1) >= 1.0) fail(ErrorCode::config, "Hopf anisotropy must stay below 1");
  return [=](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    const double r2 = x.squaredNorm();
    const double s = 0.5 * std::log(r2);
    const double phi = std::atan2(x[1], x[0]);
    const double eps = eps0 + eps1 * std::cos(phi);
    const double u = uamp * std::sin(kTwoPi * s / log2) * std::cos(phi);
    const double chi = phi + delta;
    Eigen::Vector2d e(std::cos(chi), std::sin(chi));
    const Eigen::Matrix2d proj = e * e.transpose();
    const Eigen::Matrix2d m = (Eigen::Matrix2d::Identity() - proj) / (1.0 - eps) + proj / (1.0 + eps);
    return Eigen::MatrixXd(m * (std::exp(2.0 * u) / r2));
  };
}

HermitianMetricField hermitian_metric(int m, const std::string& preset,
                                      const std::map<std::string, double>& params) {
  using C = std::complex<double>;
  const std::string where = (m == 1 ? "ctorus1/" : "ctorus2/") + preset;
  if (m == 1) {
    if (preset == "flat") {
      check_params(params, {"scale"}, where);
      const double scale = param(params, "scale", 1.0);
      return [scale](const Eigen::VectorXd&) { return Eigen::MatrixXcd::Constant(1, 1, C(scale, 0.0)); };
    }
    if (preset == "conformal") {
      check_params(params, {"amp"}, where);
      const double amp = param(params, "amp", 0.5);
      return [amp](const Eigen::VectorXd& x) {
        const double lam = std::exp(amp * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[1]));
        return Eigen::MatrixXcd::Constant(1, 1, C(lam, 0.0));
      };
    }
  } else if (m == 2) {
    // axes: x1, x2, y1, y2
    if (preset == "flat") {
      check_params(params, {"h11", "h22", "kappa"}, where);
      const double h11 = param(params, "h11", 1.0);
      const double h22 = param(params, "h22", 1.5);
      const double kappa = param(params, "kappa", 0.3);
      return [=](const Eigen::VectorXd&) {
        Eigen::MatrixXcd h(2, 2);
        h << C(h11, 0), C(0, kappa), C(0, -kappa), C(h22, 0);
        return h;
      };
    }
    if (preset == "kahler") {
      check_params(params, {"amp"}, where);
      const double amp = param(params, "amp", 0.4);
      return [amp](const Eigen::VectorXd& x) {
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 2);
        h(0, 0) = std::exp(amp * std::sin(kTwoPi * x[0]) * std::cos(kTwoPi * x[2]));
        h(1, 1) = std::exp(amp * std::cos(kTwoPi * x[1] + kTwoPi * x[3]));
        return h;
      };
    }
    if (preset == "nonkahler") {
      check_params(params, {"amp", "kappa"}, where);
      const double amp = param(params, "amp", 0.5);
      const double kappa = param(params, "kappa", 0.0);
      return [amp, kappa](const Eigen::VectorXd& x) {
        Eigen::MatrixXcd h(2, 2);
        h << C(std::exp(amp * std::sin(kTwoPi * x[1])), 0), C(0, kappa), C(0, -kappa), C(1, 0);
        return h;
      };
    }
  }
  fail(ErrorCode::config, "unknown metric preset '" + preset + "' for complex torus");
}

std::vector<std::string> domain_names() { return {"torus1d", "torus2d", "hopf2d", "ctorus1", "ctorus2"}; }

std::vector<std::string> domain_presets(const std::string& name) {
  if (name == "torus1d") return {"identity", "sine", "coefficient-sine"};
  if (name == "torus2d") return {"identity", "diag-sine", "bumpy", "skew"};
  if (name == "hopf2d") return {"conformal", "anisotropic", "generic"};
  if (name == "ctorus1") return {"flat", "conformal"};
  if (name == "ctorus2") return {"flat", "kahler", "nonkahler"};
  return {};
}

DomainStructure build_domain(const DomainSpec& spec) {
  auto extents_or = [&](std::vector<int> fallback) {
    if (spec.extents.empty()) return fallback;
    if (spec.extents.size() == 1 && fallback.size() > 1) return std::vector<int>(fallback.size(), spec.extents[0]);
    if (spec.extents.size() != fallback.size())
      fail(ErrorCode::config, "domain " + spec.name + " expects " + std::to_string(fallback.size()) + " extents");
    return spec.extents;
  };
  const std::string label = spec.name + "/" + spec.preset;
  if (spec.name == "torus1d")
    return build_affine_torus(torus_metric(spec.name, spec.preset, spec.params),
                              PeriodicGrid(extents_or({64}), {1.0}), label);
  if (spec.name == "torus2d")
    return build_affine_torus(torus_metric(spec.name, spec.preset, spec.params),
                              PeriodicGrid(extents_or({32, 32}), {1.0, 1.0}), label);
  if (spec.name == "hopf2d")
    return build_hopf_torus(hopf_metric(spec.preset, spec.params),
                            PeriodicGrid(extents_or({32, 64}), {std::log(2.0), kTwoPi}), label);
  if (spec.name == "ctorus1")
    return build_hermitian_torus(hermitian_metric(1, spec.preset, spec.params),
                                 PeriodicGrid(extents_or({32, 32}), {1.0, 1.0}), label);
  if (spec.name == "ctorus2")
    return build_hermitian_torus(hermitian_metric(2, spec.preset, spec.params),
                                 PeriodicGrid(extents_or({12, 12, 12, 12}), {1.0, 1.0, 1.0, 1.0}), label);
  fail(ErrorCode::config, "unknown domain '" + spec.name + "'");
}

}  // namespace ndharm
