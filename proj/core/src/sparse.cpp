#include "buckle/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "buckle/error.hpp"

namespace buckle {

SparseOperator SparseOperator::from_triplets(std::size_t n, std::vector<Triplet> triplets,
                                             std::vector<std::size_t> dof_to_node,
                                             std::size_t node_count) {
  if (dof_to_node.size() != n) throw ContractError("sparse: dof map size mismatch");
  SparseOperator op;
  op.node_to_dof_.assign(node_count, -1);
  for (std::size_t d = 0; d < n; ++d) {
    if (dof_to_node[d] >= node_count) throw ContractError("sparse: dof maps outside the grid");
    op.node_to_dof_[dof_to_node[d]] = static_cast<std::int64_t>(d);
  }
  op.dof_to_node_ = std::move(dof_to_node);

  for (const auto& t : triplets) {
    if (t.row >= n || t.col >= n) throw ContractError("sparse: triplet index out of range");
  }
  std::stable_sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  op.row_ptr_.assign(n + 1, 0);
  for (std::size_t k = 0; k < triplets.size();) {
    const std::size_t r = triplets[k].row;
    const std::size_t c = triplets[k].col;
    double sum = 0.0;
    while (k < triplets.size() && triplets[k].row == r && triplets[k].col == c) {
      sum += triplets[k].value;
      ++k;
    }
    op.cols_.push_back(c);
    op.values_.push_back(sum);
    ++op.row_ptr_[r + 1];
  }
  std::partial_sum(op.row_ptr_.begin(), op.row_ptr_.end(), op.row_ptr_.begin());
  return op;
}

double SparseOperator::at(std::size_t row, std::size_t col) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
  const auto it = std::lower_bound(first, last, col);
  if (it == last || *it != col) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

double SparseOperator::max_asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < size(); ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      worst = std::max(worst, std::abs(values_[k] - at(cols_[k], r)));
    }
  }
  return worst;
}

SparseOperator SparseOperator::permuted(std::span<const std::size_t> perm) const {
  const std::size_t n = size();
  if (perm.size() != n) throw ContractError("sparse: permutation size mismatch");
  std::vector<std::size_t> inverse(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (perm[k] >= n || inverse[perm[k]] != n) throw ContractError("sparse: not a permutation");
    inverse[perm[k]] = k;
  }
  std::vector<Triplet> trips;
  trips.reserve(nonzeros());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      trips.push_back({inverse[r], inverse[cols_[k]], values_[k]});
    }
  }
  std::vector<std::size_t> d2n(n);
  for (std::size_t k = 0; k < n; ++k) d2n[k] = dof_to_node_[perm[k]];
  return from_triplets(n, std::move(trips), std::move(d2n), node_count());
}

SparseOperator SparseOperator::restricted(std::span<const std::size_t> dofs) const {
  const std::size_t n = size();
  std::vector<std::int64_t> local(n, -1);
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    if (dofs[k] >= n) throw ContractError("sparse: restriction index out of range");
    if (k > 0 && dofs[k] <= dofs[k - 1]) throw ContractError("sparse: restriction dofs must increase");
    local[dofs[k]] = static_cast<std::int64_t>(k);
  }
  SparseOperator op;
  op.row_ptr_.reserve(dofs.size() + 1);
  op.row_ptr_.push_back(0);
  for (std::size_t d : dofs) {
    for (std::size_t k = row_ptr_[d]; k < row_ptr_[d + 1]; ++k) {
      const std::int64_t c = local[cols_[k]];
      if (c < 0) continue;
      op.cols_.push_back(static_cast<std::size_t>(c));
      op.values_.push_back(values_[k]);
    }
    op.row_ptr_.push_back(op.cols_.size());
  }
  op.node_to_dof_.assign(node_count(), -1);
  op.dof_to_node_.reserve(dofs.size());
  for (std::size_t k = 0; k < dofs.size(); ++k) {
    op.dof_to_node_.push_back(dof_to_node_[dofs[k]]);
    op.node_to_dof_[dof_to_node_[dofs[k]]] = static_cast<std::int64_t>(k);
  }
  return op;
}

SparseOperator SparseOperator::scaled(double c) const {
  SparseOperator op = *this;
  for (double& v : op.values_) v *= c;
  return op;
}

std::vector<double> apply(const SparseOperator& op, std::span<const double> x) {
  if (x.size() != op.size()) {
    std::ostringstream msg;
    msg << "apply: operator has " << op.size() << " dofs, vector has " << x.size();
    throw ContractError(msg.str());
  }
  const auto rp = op.row_ptr();
  const auto cols = op.cols();
  const auto vals = op.values();
  std::vector<double> y(op.size(), 0.0);
  for (std::size_t r = 0; r < op.size(); ++r) {
    double acc = 0.0;
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) acc += vals[k] * x[cols[k]];
    y[r] = acc;
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ContractError("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double quadratic_form(const SparseOperator& op, std::span<const double> x) {
  const auto y = buckle::apply(op, x);
  return dot(x, y);
}

void write_matrix_market(std::ostream& os, const SparseOperator& op) {
  const auto rp = op.row_ptr();
  const auto cols = op.cols();
  const auto vals = op.values();
  std::size_t lower = 0;
  for (std::size_t r = 0; r < op.size(); ++r) {
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) lower += cols[k] <= r ? 1 : 0;
  }
  os << "%%MatrixMarket matrix coordinate real symmetric\n";
  os << op.size() << ' ' << op.size() << ' ' << lower << '\n';
  char buf[64];
  for (std::size_t r = 0; r < op.size(); ++r) {
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
      if (cols[k] > r) continue;
      std::snprintf(buf, sizeof buf, "%.17g", vals[k]);
      os << r + 1 << ' ' << cols[k] + 1 << ' ' << buf << '\n';
    }
  }
}

}  // namespace buckle
