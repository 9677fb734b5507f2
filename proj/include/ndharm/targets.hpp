#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ndharm {

enum class CurvatureSign { flat, nonpositive, negative, positive };

const char* to_string(CurvatureSign sign);

/// Chart-based Riemannian target. Points and vectors are coordinate arrays of
/// length dim(); circle-valued components carry a period (0 otherwise) and
/// are handled through continuous lifts.
class TargetManifold {
 public:
  virtual ~TargetManifold() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;
  virtual CurvatureSign curvature_sign() const = 0;
  /// Bound on |sectional curvature|, used by the step-size control.
  virtual double curvature_bound() const = 0;

  /// g_ij, row-major dim x dim.
  virtual void metric(std::span<const double> p, std::span<double> g) const = 0;
  /// Gamma^i_jk stored at [(i * dim + j) * dim + k].
  virtual void christoffel(std::span<const double> p, std::span<double> gamma) const = 0;
  /// R_ijkl with R(X, Y, X, Y) = K (|X|^2 |Y|^2 - <X, Y>^2); stored row-major.
  virtual void curvature(std::span<const double> p, std::span<double> r) const;
  virtual bool in_chart(std::span<const double> p) const { (void)p; return true; }
  /// Length of the geodesic from p to the lift of q selected by `hint`: each
  /// periodic component of p is shifted by hint * period before measuring.
  virtual double distance(std::span<const double> p, std::span<const double> q,
                          std::span<const int> hint) const = 0;

  /// True when every Christoffel symbol vanishes identically.
  virtual bool flat_chart() const { return false; }

  std::span<const double> periods() const noexcept { return periods_; }
  bool has_periodic_component() const;
  std::vector<int> periodic_components() const;

 protected:
  /// Constant sectional curvature K.
  void constant_curvature(double k, std::span<const double> p, std::span<double> r) const;

  std::vector<double> periods_;
};

using TargetPtr = std::shared_ptr<const TargetManifold>;

/// Names: euclidean (param n), circle (period), flat_torus (n, period),
/// hyperbolic_plane, hyperbolic_cylinder (period), sphere (threshold).
TargetPtr catalog_lookup(const std::string& name, const std::map<std::string, double>& params = {});
std::vector<std::string> target_names();

double geodesic_distance(const TargetManifold& target, std::span<const double> p, std::span<const double> q,
                         std::span<const int> hint = {});

/// Transports v along the polyline through `curve` (points flattened, dim()
/// coordinates each) by integrating dv^i + Gamma^i_jk dx^j v^k = 0 with
/// classical RK4, `substeps` per segment.
std::vector<double> parallel_transport(const TargetManifold& target, std::span<const double> curve,
                                       std::span<const double> v, int substeps = 8);

/// g-norm of v at p.
double vector_norm(const TargetManifold& target, std::span<const double> p, std::span<const double> v);

}  // namespace ndharm
