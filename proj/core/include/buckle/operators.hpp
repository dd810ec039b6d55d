#pragma once

#include <span>
#include <vector>

#include "buckle/grid.hpp"
#include "buckle/sparse.hpp"

namespace buckle {

/// Discrete bilaplacian K on the interior nodes of `mask`, weighted so that
/// u^T K u approximates the integral of |Laplacian u|^2.
///
/// K = D^T W D where D evaluates the 5-point (3-point in 1D) Laplacian at
/// every node touching a dof. Nodes outside the dof set are zero; at a
/// boundary node with a dof on one side only, the missing neighbour is the
/// mirror of that dof (zero normal derivative). W holds trapezoid weights
/// h^dim * (active incident cells) / 2^dim. Interior rows are the 13-point
/// stencil.
///
/// Throws SolverError(EmptyDomain) when the mask has no interior node.
SparseOperator assemble_bilaplacian(const Grid& grid, const DomainMask& mask);

/// Negative Laplacian M (5-point / 3-point) with zero exterior, weighted by
/// h^dim so that u^T M u approximates the integral of |grad u|^2.
SparseOperator assemble_stiffness(const Grid& grid, const DomainMask& mask);

/// Every cell active: the container operators.
DomainMask full_mask(const Grid& grid);

/// Gathers dof values from a field (entries outside the dof set are dropped).
std::vector<double> to_dofs(const SparseOperator& op, const ScalarField& v);
/// Scatters a dof vector into a field, zero elsewhere.
ScalarField to_field(const SparseOperator& op, const Grid& grid, std::span<const double> dofs);

}  // namespace buckle
