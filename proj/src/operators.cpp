#include "ndharm/operators.hpp"

#include <Eigen/SparseLU>
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <ostream>

#include "ndharm/error.hpp"

namespace ndharm {

namespace {
constexpr int kMaxComponents = 4;
constexpr int kMaxSlots = 2 * kMaxAxes + 2 * kMaxAxes * (kMaxAxes - 1);
}  // namespace

MapField::MapField(const PeriodicGrid& grid, TargetPtr target, std::vector<double> values, Winding winding)
    : target_(std::move(target)),
      n_(target_ ? target_->dim() : 0),
      axes_(grid.axes()),
      nodes_(grid.size()),
      values_(std::move(values)),
      winding_(std::move(winding)) {
  if (!target_) fail(ErrorCode::invalid_argument, "map field needs a target");
  if (n_ > kMaxComponents) fail(ErrorCode::invalid_argument, "target dimension above 4 is not supported");
  if (values_.size() != nodes_ * static_cast<std::size_t>(n_))
    fail(ErrorCode::invalid_argument, "map field values do not match grid and target");
  if (winding_.empty()) winding_.assign(static_cast<std::size_t>(n_), std::vector<int>(static_cast<std::size_t>(axes_), 0));
  if (winding_.size() != static_cast<std::size_t>(n_))
    fail(ErrorCode::invalid_argument, "winding needs one row per target component");
  const auto periods = target_->periods();
  shift_.assign(static_cast<std::size_t>(n_ * axes_), 0.0);
  for (int i = 0; i < n_; ++i) {
    const auto& row = winding_[static_cast<std::size_t>(i)];
    if (row.size() != static_cast<std::size_t>(axes_))
      fail(ErrorCode::invalid_argument, "winding row needs one entry per domain axis");
    for (int a = 0; a < axes_; ++a) {
      const int w = row[static_cast<std::size_t>(a)];
      if (w != 0 && !(periods[static_cast<std::size_t>(i)] > 0.0))
        fail(ErrorCode::invalid_argument, "nonzero winding on a non-periodic target component");
      shift_[static_cast<std::size_t>(i * axes_ + a)] = w * periods[static_cast<std::size_t>(i)];
    }
  }
}

void MapField::gather(const PeriodicGrid& grid, std::size_t node, std::span<double> out) const {
  const auto n = static_cast<std::size_t>(n_);
  for (std::size_t i = 0; i < n; ++i) out[i] = values_[node * n + i];
  const int slots = grid.slot_count();
  for (int s = 0; s < slots; ++s) {
    const Neighbor& nb = grid.neighbor(node, s);
    bool wrapped = false;
    for (int a = 0; a < axes_; ++a) wrapped |= nb.wrap[a] != 0;
    for (std::size_t i = 0; i < n; ++i) {
      double v = values_[nb.index * n + i];
      if (wrapped) v += lift_shift(nb, static_cast<int>(i));
      out[(static_cast<std::size_t>(s) + 1) * n + i] = v;
    }
  }
}

bool MapField::in_chart() const {
  for (std::size_t node = 0; node < nodes_; ++node)
    if (!target_->in_chart(point(node))) return false;
  return true;
}

bool MapField::finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

bool MapField::lift_consistent(const PeriodicGrid& grid) const {
  const auto periods = target_->periods();
  for (std::size_t node = 0; node < nodes_; ++node)
    for (int a = 0; a < axes_; ++a) {
      const Neighbor& nb = grid.neighbor(node, PeriodicGrid::plus_slot(a));
      for (int i = 0; i < n_; ++i) {
        const double t = periods[static_cast<std::size_t>(i)];
        if (!(t > 0.0)) continue;
        const double next = value(nb.index, i) + lift_shift(nb, i);
        if (!(std::abs(next - value(node, i)) < 0.5 * t)) return false;
      }
    }
  return true;
}

// ---------------------------------------------------------------------------

namespace {

struct Workspace {
  std::array<double, (kMaxSlots + 1) * kMaxComponents> vals{};
  std::array<double, kMaxAxes * kMaxComponents> grad{};
  std::array<double, kMaxComponents * kMaxComponents * kMaxComponents> gamma{};
};

// Lifted value of component i at slot s (-1 = center).
inline double at(const Workspace& w, int n, int s, int i) {
  return w.vals[static_cast<std::size_t>((s + 1) * n + i)];
}

void check_pair(const DomainStructure& domain, const MapField& f) {
  if (f.nodes() != domain.size() || f.axes() != domain.axes())
    fail(ErrorCode::invalid_argument, "map field does not live on this domain");
}

void fill_gradient(const PeriodicGrid& grid, int d, int n, Workspace& w) {
  for (int j = 0; j < d; ++j) {
    const double inv = 1.0 / (2.0 * grid.spacing(j));
    for (int i = 0; i < n; ++i)
      w.grad[static_cast<std::size_t>(j * n + i)] =
          (at(w, n, PeriodicGrid::plus_slot(j), i) - at(w, n, PeriodicGrid::minus_slot(j), i)) * inv;
  }
}

// A^{jk} Gamma^i_ab d_j f^a d_k f^b for every i, added into out.
void add_christoffel_term(const DomainStructure& domain, std::size_t node, int d, int n, const Workspace& w,
                          double* out) {
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        const double g = w.gamma[static_cast<std::size_t>((i * n + a) * n + b)];
        if (g == 0.0) continue;
        double quad = 0.0;
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k)
            quad += domain.a(node, j, k) * w.grad[static_cast<std::size_t>(j * n + a)] *
                    w.grad[static_cast<std::size_t>(k * n + b)];
        acc += g * quad;
      }
    out[i] += acc;
  }
}

}  // namespace

VectorField tension(const DomainStructure& domain, const MapField& f) {
  VectorField out;
  tension(domain, f, out);
  return out;
}

void tension(const DomainStructure& domain, const MapField& f, VectorField& out) {
  check_pair(domain, f);
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const int n = f.components();
  const auto un = static_cast<std::size_t>(n);
  const TargetManifold& target = f.target();
  const bool flat = target.flat_chart();
  out.assign(f.nodes() * un, 0.0);

  std::array<double, kMaxAxes> inv_h2{};
  for (int j = 0; j < d; ++j) inv_h2[static_cast<std::size_t>(j)] = 1.0 / (grid.spacing(j) * grid.spacing(j));

  Workspace w;
  for (std::size_t node = 0; node < f.nodes(); ++node) {
    f.gather(grid, node, w.vals);
    double* res = out.data() + node * un;
    for (int i = 0; i < n; ++i) {
      const double c = at(w, n, -1, i);
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        const double second =
            at(w, n, PeriodicGrid::plus_slot(j), i) - 2.0 * c + at(w, n, PeriodicGrid::minus_slot(j), i);
        acc += domain.a(node, j, j) * second * inv_h2[static_cast<std::size_t>(j)];
      }
      for (int j = 0; j < d; ++j)
        for (int k = j + 1; k < d; ++k) {
          const double ajk = 0.5 * (domain.a(node, j, k) + domain.a(node, k, j));
          if (ajk == 0.0) continue;
          const double cross = at(w, n, grid.corner_slot(j, k, 1, 1), i) - at(w, n, grid.corner_slot(j, k, 1, -1), i) -
                               at(w, n, grid.corner_slot(j, k, -1, 1), i) + at(w, n, grid.corner_slot(j, k, -1, -1), i);
          acc += 2.0 * ajk * cross / (4.0 * grid.spacing(j) * grid.spacing(k));
        }
      for (int j = 0; j < d; ++j) {
        const double bj = domain.b(node, j);
        if (bj > 0.0)
          acc += bj * (at(w, n, PeriodicGrid::plus_slot(j), i) - c) / grid.spacing(j);
        else if (bj < 0.0)
          acc += bj * (c - at(w, n, PeriodicGrid::minus_slot(j), i)) / grid.spacing(j);
      }
      res[i] = acc;
    }
    if (!flat) {
      if (!target.in_chart(f.point(node))) fail(ErrorCode::chart, "map value outside the target chart");
      target.christoffel(f.point(node), std::span<double>(w.gamma.data(), un * un * un));
      fill_gradient(grid, d, n, w);
      add_christoffel_term(domain, node, d, n, w, res);
    }
  }
}

VectorField divergence_tension(const DomainStructure& domain, const MapField& f) {
  check_pair(domain, f);
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const int n = f.components();
  const auto un = static_cast<std::size_t>(n);
  const auto ud = static_cast<std::size_t>(d);
  const TargetManifold& target = f.target();
  const bool flat = target.flat_chart();

  // Flux coefficients c^{jk} = w A^{jk} at nodes.
  std::vector<double> weight(domain.size());
  std::vector<double> flux(domain.size() * ud * ud);
  for (std::size_t node = 0; node < domain.size(); ++node) {
    weight[node] = std::sqrt(domain.metric_det(node));
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        flux[(node * ud + static_cast<std::size_t>(j)) * ud + static_cast<std::size_t>(k)] =
            weight[node] * 0.5 * (domain.a(node, j, k) + domain.a(node, k, j));
  }
  auto c = [&](std::size_t node, int j, int k) {
    return flux[(node * ud + static_cast<std::size_t>(j)) * ud + static_cast<std::size_t>(k)];
  };

  VectorField out(f.nodes() * un, 0.0);
  Workspace w;
  for (std::size_t node = 0; node < f.nodes(); ++node) {
    f.gather(grid, node, w.vals);
    double* res = out.data() + node * un;
    for (int i = 0; i < n; ++i) {
      const double center = at(w, n, -1, i);
      double acc = 0.0;
      for (int j = 0; j < d; ++j) {
        const int ps = PeriodicGrid::plus_slot(j), ms = PeriodicGrid::minus_slot(j);
        const std::size_t pn = grid.neighbor(node, ps).index, mn = grid.neighbor(node, ms).index;
        const double face_p = 0.5 * (c(node, j, j) + c(pn, j, j));
        const double face_m = 0.5 * (c(node, j, j) + c(mn, j, j));
        const double h = grid.spacing(j);
        acc += (face_p * (at(w, n, ps, i) - center) - face_m * (center - at(w, n, ms, i))) / (h * h);
      }
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) {
          if (j == k) continue;
          const std::size_t pn = grid.neighbor(node, PeriodicGrid::plus_slot(j)).index;
          const std::size_t mn = grid.neighbor(node, PeriodicGrid::minus_slot(j)).index;
          if (c(pn, j, k) == 0.0 && c(mn, j, k) == 0.0) continue;
          // centered d_k f evaluated at the +j and -j neighbors
          const double gp = at(w, n, grid.corner_slot(j, k, 1, 1), i) - at(w, n, grid.corner_slot(j, k, 1, -1), i);
          const double gm = at(w, n, grid.corner_slot(j, k, -1, 1), i) - at(w, n, grid.corner_slot(j, k, -1, -1), i);
          acc += (c(pn, j, k) * gp - c(mn, j, k) * gm) / (4.0 * grid.spacing(j) * grid.spacing(k));
        }
      res[i] = acc / weight[node];
    }
    if (!flat) {
      if (!target.in_chart(f.point(node))) fail(ErrorCode::chart, "map value outside the target chart");
      target.christoffel(f.point(node), std::span<double>(w.gamma.data(), un * un * un));
      fill_gradient(grid, d, n, w);
      add_christoffel_term(domain, node, d, n, w, res);
    }
  }
  return out;
}

std::vector<double> centered_gradient(const DomainStructure& domain, const MapField& f) {
  check_pair(domain, f);
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const int n = f.components();
  std::vector<double> out(f.nodes() * static_cast<std::size_t>(d * n));
  Workspace w;
  for (std::size_t node = 0; node < f.nodes(); ++node) {
    f.gather(grid, node, w.vals);
    fill_gradient(grid, d, n, w);
    std::copy_n(w.grad.begin(), d * n, out.begin() + static_cast<std::ptrdiff_t>(node * static_cast<std::size_t>(d * n)));
  }
  return out;
}

DiscreteOperator scalar_operator_matrix(const DomainStructure& domain) {
  const PeriodicGrid& grid = domain.grid();
  const int d = grid.axes();
  const auto n = grid.size();
  DiscreteOperator op;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n * static_cast<std::size_t>(1 + grid.slot_count()));

  for (std::size_t node = 0; node < n; ++node) {
    const auto row = static_cast<int>(node);
    double center = 0.0;
    bool violated = false;
    auto add = [&](int slot, double weight) {
      if (weight == 0.0) return;
      trip.emplace_back(row, static_cast<int>(grid.neighbor(node, slot).index), weight);
      center -= weight;
    };
    for (int j = 0; j < d; ++j) {
      const double h = grid.spacing(j);
      const double diag = domain.a(node, j, j) / (h * h);
      add(PeriodicGrid::plus_slot(j), diag);
      add(PeriodicGrid::minus_slot(j), diag);
      const double bj = domain.b(node, j);
      if (bj > 0.0)
        add(PeriodicGrid::plus_slot(j), bj / h);
      else if (bj < 0.0)
        add(PeriodicGrid::minus_slot(j), -bj / h);
    }
    for (int j = 0; j < d; ++j)
      for (int k = j + 1; k < d; ++k) {
        const double ajk = 0.5 * (domain.a(node, j, k) + domain.a(node, k, j));
        if (ajk == 0.0) continue;
        const double hj = grid.spacing(j), hk = grid.spacing(k);
        const double wgt = ajk / (2.0 * hj * hk);
        add(grid.corner_slot(j, k, 1, 1), wgt);
        add(grid.corner_slot(j, k, -1, -1), wgt);
        add(grid.corner_slot(j, k, 1, -1), -wgt);
        add(grid.corner_slot(j, k, -1, 1), -wgt);
        const double bound = std::min(domain.a(node, j, j) / (hj * hj), domain.a(node, k, k) / (hk * hk));
        if (std::abs(ajk) / (hj * hk) > bound) violated = true;
      }
    trip.emplace_back(row, row, center);
    if (violated) ++op.mesh_ratio_violations;
  }
  op.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  if (op.mesh_ratio_violations > 0)
    op.warnings.push_back("mesh-ratio condition violated at " + std::to_string(op.mesh_ratio_violations) + " nodes");
  return op;
}

std::vector<double> invariant_measure(const DiscreteOperator& op) {
  const Eigen::Index n = op.matrix.rows();
  if (n == 0 || op.matrix.cols() != n) fail(ErrorCode::invalid_argument, "invariant measure needs a square operator");

  // Solve L^T mu = 0 with the first equation replaced by mu_0 = 1. Row sums
  // of L vanish, so the dropped equation is implied by the others.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(op.matrix.nonZeros()) + 1);
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.matrix, r); it; ++it)
      if (it.col() != 0) trip.emplace_back(static_cast<int>(it.col()), static_cast<int>(r), it.value());
  trip.emplace_back(0, 0, 1.0);
  Eigen::SparseMatrix<double> system(n, n);
  system.setFromTriplets(trip.begin(), trip.end());
  system.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(system);
  if (lu.info() != Eigen::Success) fail(ErrorCode::not_converged, "invariant measure: factorization failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs[0] = 1.0;
  Eigen::VectorXd mu = lu.solve(rhs);
  // one step of iterative refinement
  const Eigen::VectorXd resid = rhs - system * mu;
  mu += lu.solve(resid);
  if (lu.info() != Eigen::Success || !mu.allFinite())
    fail(ErrorCode::not_converged, "invariant measure: solve failed");

  const double total = mu.sum();
  mu /= total;
  const double largest = mu.cwiseAbs().maxCoeff();
  if (mu.minCoeff() < -1e-12 * std::max(1.0, largest))
    fail(ErrorCode::numeric, "invariant measure has negative entries");
  const Eigen::VectorXd check = op.matrix.transpose() * mu;
  const double scale = Eigen::Map<const Eigen::VectorXd>(op.matrix.valuePtr(), op.matrix.nonZeros()).cwiseAbs().maxCoeff();
  if (check.cwiseAbs().maxCoeff() > 1e-9 * scale * largest)
    fail(ErrorCode::not_converged, "invariant measure residual too large");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::max(mu[i], 0.0);
  return out;
}

std::vector<double> drift_prediction(const DomainStructure& domain, const MapField& reference) {
  const auto mu = invariant_measure(scalar_operator_matrix(domain));
  return drift_prediction(domain, reference, mu);
}

std::vector<double> drift_prediction(const DomainStructure& domain, const MapField& reference,
                                     std::span<const double> mu) {
  if (!reference.target().flat_chart())
    fail(ErrorCode::invalid_argument, "drift prediction needs a flat target");
  if (mu.size() != domain.size()) fail(ErrorCode::invalid_argument, "measure does not match the domain");
  const VectorField tau = tension(domain, reference);
  const int n = reference.components();
  std::vector<double> out;
  for (int i : reference.target().periodic_components()) {
    double acc = 0.0;
    for (std::size_t node = 0; node < domain.size(); ++node)
      acc += mu[node] * tau[node * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)];
    out.push_back(acc);
  }
  return out;
}

void write_coordinate_text(const DiscreteOperator& op, std::ostream& os) {
  char buf[64];
  for (Eigen::Index r = 0; r < op.matrix.rows(); ++r)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(op.matrix, r); it; ++it) {
      auto res = std::to_chars(buf, buf + sizeof buf, it.value());
      os << r << ' ' << it.col() << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf)) << '\n';
    }
}

}  // namespace ndharm
