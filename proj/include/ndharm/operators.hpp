#pragma once

#include <Eigen/Sparse>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ndharm/geometry.hpp"
#include "ndharm/targets.hpp"

namespace ndharm {

/// Winding numbers: winding[i][a] is the number of turns component i makes
/// along domain axis a. Rows of non-periodic components must be zero.
using Winding = std::vector<std::vector<int>>;

/// Grid-sampled map into a target chart. Periodic target components are
/// stored as continuous lifts; crossing the seam of domain axis a shifts the
/// lift of component i by winding[i][a] * period_i.
class MapField {
 public:
  MapField(const PeriodicGrid& grid, TargetPtr target, std::vector<double> values, Winding winding);

  const TargetManifold& target() const noexcept { return *target_; }
  const TargetPtr& target_ptr() const noexcept { return target_; }
  int components() const noexcept { return n_; }
  int axes() const noexcept { return axes_; }
  std::size_t nodes() const noexcept { return nodes_; }
  const Winding& winding() const noexcept { return winding_; }

  double value(std::size_t node, int comp) const { return values_[node * static_cast<std::size_t>(n_) + static_cast<std::size_t>(comp)]; }
  std::span<const double> point(std::size_t node) const {
    return std::span<const double>(values_).subspan(node * static_cast<std::size_t>(n_), static_cast<std::size_t>(n_));
  }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> mutable_values() noexcept { return values_; }

  /// Lift offset picked up by component `comp` when a stencil step crosses
  /// seams as recorded in `nb.wrap`.
  double lift_shift(const Neighbor& nb, int comp) const {
    double s = 0.0;
    for (int a = 0; a < axes_; ++a)
      if (nb.wrap[a] != 0) s += nb.wrap[a] * shift_[static_cast<std::size_t>(comp * axes_ + a)];
    return s;
  }

  /// Fills out[(slot + 1) * n + i] with the lifted value of component i at
  /// the node (slot -1) and at each stencil neighbor.
  void gather(const PeriodicGrid& grid, std::size_t node, std::span<double> out) const;

  /// Every value inside the target chart.
  bool in_chart() const;
  /// Lifts are continuous: adjacent lifted values of each periodic component
  /// differ by less than half a period, seams included.
  bool lift_consistent(const PeriodicGrid& grid) const;
  bool finite() const;

 private:
  TargetPtr target_;
  int n_;
  int axes_;
  std::size_t nodes_;
  std::vector<double> values_;
  Winding winding_;
  std::vector<double> shift_;
};

/// Per-node target vectors, layout [node * n + i].
using VectorField = std::vector<double>;

/// Non-divergence tension
///   tau^i = A^{jk} (d_jk f^i + Gamma^i_ab d_j f^a d_k f^b) + B^j d_j f^i
/// with centered second differences (4-point corner stencil for mixed terms),
/// centered gradients in the Christoffel term and upwinded B.
VectorField tension(const DomainStructure& domain, const MapField& f);
void tension(const DomainStructure& domain, const MapField& f, VectorField& out);

/// Divergence-form comparison operator
///   (1/w) d_j (w A^{jk} d_k f^i) + A^{jk} Gamma^i_ab d_j f^a d_k f^b,
/// w = sqrt(metric_det), flux form with face-averaged coefficients.
VectorField divergence_tension(const DomainStructure& domain, const MapField& f);

/// Centered gradient, out[(node * d + j) * n + i] = d_j f^i.
std::vector<double> centered_gradient(const DomainStructure& domain, const MapField& f);

/// Sparse realization of the linear part A^{jk} d_jk + B^j d_j on scalar
/// fields.
struct DiscreteOperator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  /// Nodes where some |A^{jk}| / (h_j h_k) exceeds min(A^{jj}/h_j^2, A^{kk}/h_k^2).
  std::size_t mesh_ratio_violations = 0;
  std::vector<std::string> warnings;
};

DiscreteOperator scalar_operator_matrix(const DomainStructure& domain);

/// Left null vector of the operator, positive and normalized to sum 1.
std::vector<double> invariant_measure(const DiscreteOperator& op);

/// Asymptotic velocity of the mu-average of each periodic component for a
/// reference map into a flat target: c_i = sum_x mu(x) tau^i(x).
std::vector<double> drift_prediction(const DomainStructure& domain, const MapField& reference);
std::vector<double> drift_prediction(const DomainStructure& domain, const MapField& reference,
                                     std::span<const double> mu);

/// Writes "row col value" lines (0-based) for every stored entry.
void write_coordinate_text(const DiscreteOperator& op, std::ostream& os);

}  // namespace ndharm
