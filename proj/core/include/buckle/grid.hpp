#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace buckle {

inline constexpr int kMaxDim = 3;

using MultiIndex = std::array<int, kMaxDim>;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Uniform Cartesian grid over a box container. Nodes sit at lo + i*h on
/// every axis; cells are the boxes between neighbouring nodes.
///
/// Flat indices are row-major with axis 0 (x) running fastest.
class Grid {
 public:
  /// Validates dim in {1, 2}, at least 5 nodes per axis and a spacing that
  /// agrees across axes (relative 1e-12). Throws ContractError otherwise.
  Grid(int dim, std::vector<Interval> extent, std::vector<int> nodes_per_axis);

  int dim() const { return dim_; }
  double h() const { return h_; }
  const std::vector<Interval>& extent() const { return extent_; }
  int nodes(int axis) const { return nodes_[axis]; }
  int cells(int axis) const { return nodes_[axis] - 1; }
  const std::vector<int>& nodes_per_axis() const { return nodes_; }

  std::size_t node_count() const { return node_count_; }
  std::size_t cell_count() const { return cell_count_; }
  std::size_t node_stride(int axis) const { return node_stride_[axis]; }

  double coord(int axis, int i) const { return extent_[axis].lo + i * h_; }
  double cell_center(int axis, int i) const { return extent_[axis].lo + (i + 0.5) * h_; }
  /// h^dim.
  double cell_volume() const { return cell_volume_; }
  double container_volume() const;

  MultiIndex node_multi(std::size_t flat) const;
  std::size_t node_flat(const MultiIndex& m) const;
  MultiIndex cell_multi(std::size_t flat) const;
  std::size_t cell_flat(const MultiIndex& m) const;

  /// True when the node lies on the container boundary.
  bool on_wall(std::size_t node) const;
  /// Fraction of the node's 2^dim incident cells that exist (trapezoid weight).
  double node_weight_fraction(std::size_t node) const;

  /// Corner nodes of a cell (2^dim entries).
  std::vector<std::size_t> cell_corners(std::size_t cell) const;
  /// Cells incident to a node that lie inside the container.
  std::vector<std::size_t> node_cells(std::size_t node) const;

  bool operator==(const Grid& other) const;

 private:
  int dim_;
  std::vector<Interval> extent_;
  std::vector<int> nodes_;
  double h_;
  double cell_volume_;
  std::size_t node_count_;
  std::size_t cell_count_;
  std::array<std::size_t, kMaxDim> node_stride_{};
  std::array<std::size_t, kMaxDim> cell_stride_{};
};

/// Grid with the same node count on every axis.
Grid make_grid(int dim, std::vector<Interval> extent, int nodes_per_axis);

/// Nodal values of a clamped field on the container. Values are finite and
/// every container-wall node is exactly zero.
class ScalarField {
 public:
  explicit ScalarField(Grid grid);
  /// Throws ContractError on size mismatch, non-finite values or nonzero walls.
  ScalarField(Grid grid, std::vector<double> values);

  /// Evaluates `f` at every node; wall nodes are set to exactly zero.
  static ScalarField sample(const Grid& grid,
                            const std::function<double(std::span<const double>)>& f);

  const Grid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  double max_abs() const;
  ScalarField scaled(double c) const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Per-cell domain indicator. `volume` is the active count times h^dim.
class DomainMask {
 public:
  explicit DomainMask(Grid grid);
  DomainMask(Grid grid, std::vector<std::uint8_t> active);

  /// Cells whose centre satisfies `inside`.
  static DomainMask from_predicate(const Grid& grid,
                                   const std::function<bool(std::span<const double>)>& inside);

  const Grid& grid() const { return grid_; }
  bool active(std::size_t cell) const { return active_[cell] != 0; }
  std::span<const std::uint8_t> cells() const { return active_; }
  std::size_t active_count() const { return count_; }
  double volume() const { return static_cast<double>(count_) * grid_.cell_volume(); }
  bool empty() const { return count_ == 0; }

  /// Interior nodes of the mask: off the container walls with every incident
  /// cell active. These are the degrees of freedom of masked operators.
  std::vector<std::uint8_t> interior_nodes() const;

 private:
  Grid grid_;
  std::vector<std::uint8_t> active_;
  std::size_t count_ = 0;
};

/// Nodewise discrete Laplacian (3-point / 5-point). At container walls the
/// missing neighbour is the mirror image of the interior one, so the normal
/// derivative vanishes.
std::vector<double> discrete_laplacian(const ScalarField& v);

/// Central-difference gradient magnitude per node.
std::vector<double> gradient_magnitude(const ScalarField& v);

/// Trapezoid approximation of the integral of |grad v|^2 with central differences.
double grad_energy(const ScalarField& v);

/// Trapezoid approximation of the integral of |Laplacian v|^2.
double laplacian_energy(const ScalarField& v);

}  // namespace buckle
