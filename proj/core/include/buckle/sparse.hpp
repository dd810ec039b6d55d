#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace buckle {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Square sparse matrix in compressed-row layout, indexed by degrees of
/// freedom. `dof_to_node` ties every dof back to a grid node so that dof
/// vectors can be scattered into fields.
class SparseOperator {
 public:
  SparseOperator() = default;

  /// Sums duplicate entries in input order; column indices end up sorted.
  static SparseOperator from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                      std::vector<std::size_t> dof_to_node,
                                      std::size_t node_count);

  std::size_t size() const { return row_ptr_.empty() ? 0 : row_ptr_.size() - 1; }
  std::size_t nonzeros() const { return values_.size(); }
  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::size_t> cols() const { return cols_; }
  std::span<const double> values() const { return values_; }

  std::span<const std::size_t> dof_to_node() const { return dof_to_node_; }
  /// -1 for nodes that are not degrees of freedom.
  std::span<const std::int64_t> node_to_dof() const { return node_to_dof_; }
  std::size_t node_count() const { return node_to_dof_.size(); }

  double at(std::size_t row, std::size_t col) const;
  /// Largest |a_ij - a_ji| over stored entries.
  double max_asymmetry() const;

  /// New dof k is old dof perm[k].
  SparseOperator permuted(std::span<const std::size_t> perm) const;
  /// Principal submatrix on the given (increasing) dofs.
  SparseOperator restricted(std::span<const std::size_t> dofs) const;
  SparseOperator scaled(double c) const;

 private:
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
  std::vector<std::size_t> dof_to_node_;
  std::vector<std::int64_t> node_to_dof_;
};

/// y = A x, rows summed left to right.
std::vector<double> apply(const SparseOperator& op, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// x^T A x.
double quadratic_form(const SparseOperator& op, std::span<const double> x);

/// `%%MatrixMarket matrix coordinate real symmetric`, lower triangle, 1-based.
void write_matrix_market(std::ostream& os, const SparseOperator& op);

}  // namespace buckle
