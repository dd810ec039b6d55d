#include "buckle/operators.hpp"

#include <cmath>

#include "buckle/error.hpp"

namespace buckle {
namespace {

struct DofLayout {
  std::vector<std::size_t> dof_to_node;
  std::vector<std::int64_t> node_to_dof;
};

DofLayout layout(const Grid& grid, const DomainMask& mask) {
  if (!(mask.grid() == grid)) throw ContractError("operators: mask lives on a different grid");
  const auto interior = mask.interior_nodes();
  DofLayout out;
  out.node_to_dof.assign(grid.node_count(), -1);
  for (std::size_t n = 0; n < interior.size(); ++n) {
    if (!interior[n]) continue;
    out.node_to_dof[n] = static_cast<std::int64_t>(out.dof_to_node.size());
    out.dof_to_node.push_back(n);
  }
  if (out.dof_to_node.empty()) {
    throw SolverError(SolverError::Kind::EmptyDomain,
                      "operators: mask has no interior node (empty dof set)");
  }
  return out;
}

struct Coef {
  std::size_t dof;
  double value;
};

}  // namespace

SparseOperator assemble_bilaplacian(const Grid& grid, const DomainMask& mask) {
  const DofLayout dl = layout(grid, mask);
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  const double corners = static_cast<double>(1 << grid.dim());
  const auto cells = mask.cells();

  auto dof_of = [&](const MultiIndex& m, int axis, int offset) -> std::int64_t {
    MultiIndex q = m;
    q[axis] += offset;
    if (q[axis] < 0 || q[axis] >= grid.nodes(axis)) return -1;
    return dl.node_to_dof[grid.node_flat(q)];
  };

  std::vector<Triplet> trips;
  std::vector<Coef> row;
  for (std::size_t b = 0; b < grid.node_count(); ++b) {
    const MultiIndex m = grid.node_multi(b);
    const std::int64_t self = dl.node_to_dof[b];
    row.clear();
    for (int a = 0; a < grid.dim(); ++a) {
      const std::int64_t lo = dof_of(m, a, -1);
      const std::int64_t hi = dof_of(m, a, +1);
      if (self >= 0) {
        if (lo >= 0) row.push_back({static_cast<std::size_t>(lo), inv_h2});
        if (hi >= 0) row.push_back({static_cast<std::size_t>(hi), inv_h2});
        row.push_back({static_cast<std::size_t>(self), -2.0 * inv_h2});
      } else if ((lo >= 0) != (hi >= 0)) {
        // Boundary node with a dof on one side: the ghost mirrors it.
        const std::size_t d = static_cast<std::size_t>(lo >= 0 ? lo : hi);
        row.push_back({d, 2.0 * inv_h2});
      } else {
        if (lo >= 0) row.push_back({static_cast<std::size_t>(lo), inv_h2});
        if (hi >= 0) row.push_back({static_cast<std::size_t>(hi), inv_h2});
      }
    }
    if (row.empty()) continue;

    double active = 0.0;
    for (auto c : grid.node_cells(b)) active += cells[c] ? 1.0 : 0.0;
    const double w = grid.cell_volume() * active / corners;
    if (w == 0.0) continue;
    for (const Coef& ci : row) {
      for (const Coef& cj : row) trips.push_back({ci.dof, cj.dof, w * ci.value * cj.value});
    }
  }
  return SparseOperator::from_triplets(dl.dof_to_node.size(), std::move(trips), dl.dof_to_node,
                                       grid.node_count());
}

SparseOperator assemble_stiffness(const Grid& grid, const DomainMask& mask) {
  const DofLayout dl = layout(grid, mask);
  const double s = grid.cell_volume() / (grid.h() * grid.h());
  std::vector<Triplet> trips;
  for (std::size_t d = 0; d < dl.dof_to_node.size(); ++d) {
    const std::size_t n = dl.dof_to_node[d];
    const MultiIndex m = grid.node_multi(n);
    trips.push_back({d, d, 2.0 * grid.dim() * s});
    for (int a = 0; a < grid.dim(); ++a) {
      for (int off : {-1, 1}) {
        MultiIndex q = m;
        q[a] += off;
        const std::int64_t nd = dl.node_to_dof[grid.node_flat(q)];
        if (nd >= 0) trips.push_back({d, static_cast<std::size_t>(nd), -s});
      }
    }
  }
  return SparseOperator::from_triplets(dl.dof_to_node.size(), std::move(trips), dl.dof_to_node,
                                       grid.node_count());
}

DomainMask full_mask(const Grid& grid) {
  return DomainMask(grid, std::vector<std::uint8_t>(grid.cell_count(), 1));
}

std::vector<double> to_dofs(const SparseOperator& op, const ScalarField& v) {
  if (v.size() != op.node_count()) throw ContractError("to_dofs: field/operator grid mismatch");
  const auto d2n = op.dof_to_node();
  std::vector<double> x(d2n.size());
  for (std::size_t d = 0; d < d2n.size(); ++d) x[d] = v[d2n[d]];
  return x;
}

ScalarField to_field(const SparseOperator& op, const Grid& grid, std::span<const double> dofs) {
  if (dofs.size() != op.size()) throw ContractError("to_field: dof vector size mismatch");
  if (grid.node_count() != op.node_count()) throw ContractError("to_field: grid mismatch");
  std::vector<double> vals(grid.node_count(), 0.0);
  const auto d2n = op.dof_to_node();
  for (std::size_t d = 0; d < d2n.size(); ++d) vals[d2n[d]] = dofs[d];
  return ScalarField(grid, std::move(vals));
}

}  // namespace buckle
