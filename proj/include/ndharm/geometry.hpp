#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ndharm/grid.hpp"

namespace ndharm {

enum class DomainKind { affine, hermitian };

/// Second-order operator L = A^{jk} d_j d_k + B^j d_j sampled on a periodic
/// grid, expressed in the grid's computational coordinates. Immutable once
/// built.
class DomainStructure {
 public:
  /// `a` holds one row-major d x d block per node, `b` one d-vector per node.
  /// Throws if any A block is not symmetric positive definite.
  DomainStructure(PeriodicGrid grid, DomainKind kind, std::vector<double> a, std::vector<double> b,
                  std::vector<double> metric_det, std::string label = {});

  const PeriodicGrid& grid() const noexcept { return grid_; }
  DomainKind kind() const noexcept { return kind_; }
  const std::string& label() const noexcept { return label_; }
  int axes() const noexcept { return grid_.axes(); }
  std::size_t size() const noexcept { return grid_.size(); }

  double a(std::size_t node, int j, int k) const {
    const auto d = static_cast<std::size_t>(axes());
    return a_[node * d * d + static_cast<std::size_t>(j) * d + static_cast<std::size_t>(k)];
  }
  double b(std::size_t node, int j) const {
    return b_[node * static_cast<std::size_t>(axes()) + static_cast<std::size_t>(j)];
  }
  /// Determinant of the Riemannian metric used by the divergence-form
  /// comparison operator.
  double metric_det(std::size_t node) const { return metric_det_[node]; }

  Eigen::MatrixXd a_matrix(std::size_t node) const;
  Eigen::VectorXd b_vector(std::size_t node) const;
  std::span<const double> a_data() const noexcept { return a_; }
  std::span<const double> b_data() const noexcept { return b_; }

  /// True when B vanishes identically.
  bool first_order_free() const;

 private:
  PeriodicGrid grid_;
  DomainKind kind_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> metric_det_;
  std::string label_;
};

using DomainPtr = std::shared_ptr<const DomainStructure>;

/// Smooth change of coordinates y = forward(x) with analytic derivatives.
/// jacobian(x)(j, a) = dy^j/dx^a; hessian(x)[j](a, b) = d^2 y^j / dx^a dx^b.
struct ChartChange {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> forward;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
  std::function<std::vector<Eigen::MatrixXd>(const Eigen::VectorXd&)> hessian;
};

ChartChange identity_change(int dims);
/// y = M x + shift.
ChartChange affine_change(const Eigen::MatrixXd& m, const Eigen::VectorXd& shift);

using MetricField = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;
using HermitianMetricField = std::function<Eigen::MatrixXcd(const Eigen::VectorXd& x)>;

/// Affine torus in its global affine coordinates: A = metric^{-1}, B = 0.
DomainStructure build_affine_torus(const MetricField& metric, const PeriodicGrid& grid,
                                   std::string label = {});

/// Hopf torus (R^2 \ 0) / (x -> 2x) gridded in log-polar coordinates
/// (s, phi) = (log|x|, arg x). `metric` is evaluated in Cartesian x and must
/// satisfy 4 * metric(2x) == metric(x).
DomainStructure build_hopf_torus(const MetricField& metric, const PeriodicGrid& grid,
                                 std::string label = {});

/// Complex torus C^m / Z^{2m}, grid axes ordered (x_1..x_m, y_1..y_m).
/// `metric` returns the Hermitian matrix H with H(a, b) = gamma_{a bbar}.
DomainStructure build_hermitian_torus(const HermitianMetricField& metric, const PeriodicGrid& grid,
                                      std::string label = {});

/// Re-expresses the operator in coordinates y = change.forward(x), node by
/// node: A' = J A J^T, B'^j = J^j_a B^a + A^{ab} H^j_{ab}.
DomainStructure transform_operator(const DomainStructure& domain, const ChartChange& change);

/// Pointwise action A^{jk} hess_{jk} + B^j grad_j at a node, given exact
/// derivatives of a test function there (hess row-major d x d).
double apply_coefficients(const DomainStructure& domain, std::size_t node,
                          std::span<const double> gradient, std::span<const double> hessian);

/// Catalog entry: domain name (torus1d, torus2d, hopf2d, ctorus1, ctorus2),
/// metric preset and free parameters.
struct DomainSpec {
  std::string name;
  std::string preset;
  std::map<std::string, double> params;
  std::vector<int> extents;
};

DomainStructure build_domain(const DomainSpec& spec);

/// Catalog metric evaluators, exposed so tests can reach the closed forms.
MetricField torus_metric(const std::string& name, const std::string& preset,
                         const std::map<std::string, double>& params);
MetricField hopf_metric(const std::string& preset, const std::map<std::string, double>& params);
HermitianMetricField hermitian_metric(int m, const std::string& preset,
                                      const std::map<std::string, double>& params);

std::vector<std::string> domain_names();
std::vector<std::string> domain_presets(const std::string& name);

}  // namespace ndharm
