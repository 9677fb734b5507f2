#pragma once

#include <array>
#include <span>
#include <vector>

#include "ndharm/operators.hpp"

namespace ndharm {

/// One row of the monitor time series.
struct MonitorRecord {
  double t = 0.0;
  double sup_speed = 0.0;      ///< sup_x g_ij tau^i tau^j
  double total_energy = 0.0;   ///< sum_x eta * cell volume
  double sup_eta = 0.0;
  double homotopy_sup = 0.0;   ///< sup_x distance(f(x,t), f0(x)) between shared lifts
  std::array<double, 2> drift{};  ///< sum_x mu tau^i for the first two periodic components
  double parallel_residual = 0.0;
};

/// eta = 1/2 A^{jk} g_ab(f) d_j f^a d_k f^b with centered gradients.
std::vector<double> energy_density(const DomainStructure& domain, const MapField& f);

/// Nodewise geodesic distance between f and f0 using their shared lifts.
std::vector<double> homotopy_distance_field(const MapField& f, const MapField& f0);

/// Pointwise g_ij v^i v^j.
std::vector<double> squared_norms(const MapField& f, std::span<const double> v);

/// sup_x |D v|, |Dv|^2 = A^{jk} g_ab (D_j v)^a (D_k v)^b with
/// (D_j v)^i = d_j v^i + Gamma^i_ab(f) d_j f^a v^b.
double parallel_section_residual(const DomainStructure& domain, const MapField& f, std::span<const double> v);

/// v / sup_x |v|_g (zero field stays zero).
std::vector<double> normalized(const MapField& f, std::span<const double> v);

struct BochnerReport {
  /// (L - d_t) |fdot|^2 - 2 A^{jk} (g(D_j fdot, D_k fdot) - R(fdot, f_j, fdot, f_k))
  std::vector<double> residual;
  /// -A^{jk} R(fdot, f_j, fdot, f_k); nonnegative on nonpositively curved targets.
  std::vector<double> curvature_term;
  double sup_residual = 0.0;
  double sup_lhs = 0.0;
  double min_curvature_term = 0.0;
};

/// Evaluates the parabolic Bochner identity for |fdot|^2 at the middle of
/// three snapshots spaced `delta` apart in flow time, fdot = tension(f).
BochnerReport bochner_check(const DomainStructure& domain, const MapField& before, const MapField& now,
                            const MapField& after, double delta);

}  // namespace ndharm
