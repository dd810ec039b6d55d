#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "buckle/grid.hpp"

namespace buckle {

/// Cells with some incident |v| strictly above `threshold`. A cell whose
/// largest value equals the threshold stays inactive.
DomainMask extract_support(const ScalarField& v, double threshold);

/// Face-adjacency component count.
int connected_components(const DomainMask& mask);

/// Active cells sharing a face with an inactive cell. Container walls do
/// not count as boundary.
std::vector<std::size_t> boundary_cells(const DomainMask& mask);

/// Number of faces between an active and an inactive cell.
std::size_t boundary_face_count(const DomainMask& mask);

/// Staircase perimeter times h, i.e. boundary_face_count * h^dim: the volume
/// of one boundary cell layer, used as the slack on volume statements.
double boundary_slack(const DomainMask& mask);

/// Boundary cell volume over container volume.
double boundary_fraction(const DomainMask& mask);

/// Nodes where active and inactive cells meet (the discrete free boundary),
/// restricted to nodes whose radius-`reach` ball stays inside the container.
std::vector<std::size_t> boundary_nodes(const DomainMask& mask, double reach = 0.0);

struct DensityEstimate {
  double c1 = 1.0;
  std::vector<std::pair<double, double>> per_radius;  ///< (r, min fraction)
  std::size_t points = 0;
};

/// Minimum, over boundary nodes x0 and radii r, of the fraction of cells
/// with centre in B_r(x0) that are active. Radii must be >= 2h.
DensityEstimate density_estimate(const DomainMask& mask, std::span<const double> radii);

struct NondegeneracyEstimate {
  double c0 = 0.0;
  std::vector<std::pair<double, double>> per_radius;  ///< (r, min sup|grad v| / r)
  std::size_t points = 0;
};

/// Minimum over boundary nodes x0 and radii r of sup_{B_r(x0)} |grad_h v| / r.
/// Radii must lie in (0, 0.25].
NondegeneracyEstimate nondegeneracy_estimate(const ScalarField& v, const DomainMask& mask,
                                             std::span<const double> radii);

/// Lower bound on interior corner angles implied by a density constant.
/// 2D: 2 pi c1. 3D: 2 arccos(1 - 2 c1).
double angle_bound(double c1, int dim);

/// Nodewise discrete Laplacian of v plus lambda v.
ScalarField u_field(const ScalarField& v, double lambda);

enum class BoundaryLabel : std::uint8_t { Gamma0, Gamma1 };

struct BoundaryLabeling {
  std::vector<std::size_t> boundary_cells;
  std::vector<BoundaryLabel> label;
  double grad_threshold = 0.0;
  std::size_t count(BoundaryLabel l) const;
};

/// Splits boundary cells by whether the largest incident |grad_h v| exceeds
/// h times the largest second difference of v.
BoundaryLabeling label_boundary(const ScalarField& v, const DomainMask& mask);

struct PhaseVolumes {
  double positive = 0.0;
  double negative = 0.0;
};

/// Volumes of the cells with a corner above `threshold` (resp. below minus it).
PhaseVolumes phase_volumes(const ScalarField& v, double threshold);

struct PassRate {
  std::size_t tested = 0;
  std::size_t passed = 0;
  std::size_t excluded = 0;  ///< branch-adjacent cells (sign check only)
  double rate() const { return tested == 0 ? 1.0 : static_cast<double>(passed) / tested; }
};

using Point = std::array<double, kMaxDim>;

/// Ball averages W_r = (sum of U over nodes in B_r with v of the point's sign)
/// / (node count of B_r) on a radius ladder. For a point with v > 0 each
/// consecutive pair r < s must satisfy W_r >= W_s - tol; for v < 0,
/// W_r <= W_s + tol. Every (point, pair) is one test.
PassRate meanvalue_test(const ScalarField& U, const ScalarField& v, std::span<const Point> points,
                        std::span<const double> radii, double tol);

/// At each boundary cell, looks at the nodes within 2h of its centre. If
/// only positive values occur the ball average of U over them (and over
/// the positive set) must exceed -tol; negative only, below tol. Cells seeing
/// both phases are branch-adjacent and excluded.
PassRate boundary_sign_check(const ScalarField& U, const ScalarField& v, const DomainMask& mask,
                             double tol);

struct Bump {
  Point center{};
  double radius = 0.0;
};

/// For phi = (1 - |x - c|^2 / rho^2)^3 on its ball, the sum of U * Lap_h(phi) * h^dim
/// over nodes with v of the centre's sign must be <= tol_rel * ||U||_inf * ||Lap_h phi||_1
/// (positive centre) or >= minus that (negative centre).
PassRate first_variation_check(const ScalarField& U, const ScalarField& v,
                               std::span<const Bump> bumps, double tol_rel);

/// Nodes of the given sign (|v| > threshold) lying within `reach` of a zero
/// node, whose `reach` ball stays inside the container; every `stride`-th in
/// flat order.
std::vector<Point> near_boundary_points(const ScalarField& v, double threshold, double reach,
                                        int sign, std::size_t stride = 1);

/// `count` bumps with radius uniform in [4h, 8h] centred on positive-phase
/// nodes within one radius of the zero set. Deterministic in `seed`.
std::vector<Bump> random_boundary_bumps(const ScalarField& v, double threshold, std::size_t count,
                                        std::uint64_t seed);

struct DiagnosticsOptions {
  double support_rel = 1e-8;
  std::vector<double> radii{0.25};  ///< at least 8h on the coarsest benchmark grid
  double meanvalue_tol_rel = 1e-3;
  double first_variation_tol_rel = 1e-3;
  std::size_t bumps = 100;
  std::uint64_t seed = 7;
};

struct DiagnosticsReport {
  double lambda = 0.0;  ///< eigenvalue used to form U
  double volume = 0.0;
  double slack = 0.0;
  int components = 0;
  double c0_estimate = 0.0;
  double c1_estimate = 0.0;
  std::vector<std::pair<double, double>> boundary_fraction_by_level;
  double min_angle_bound = 0.0;
  double meanvalue_pass_rate = 0.0;
  double sign_check_pass_rate = 0.0;
  double first_variation_pass_rate = 0.0;
  std::size_t branch_cells = 0;
  PhaseVolumes phase_volumes;
  std::size_t gamma0_cells = 0;
  std::size_t gamma1_cells = 0;
  double wall_distance = 0.0;  ///< smallest distance from an active cell centre to the container wall
  DensityEstimate density;
  NondegeneracyEstimate nondegeneracy;
  PassRate meanvalue;
  PassRate sign_check;
  PassRate first_variation;
};

/// Runs every field diagnostic on v with the given eigenvalue.
DiagnosticsReport diagnose(const ScalarField& v, double lambda, const DiagnosticsOptions& opts = {});

}  // namespace buckle
