#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "buckle/sparse.hpp"

namespace buckle {

/// Smallest eigenpair of K u = lambda M u.
struct EigenResult {
  double lambda = 0.0;
  std::vector<double> u;  ///< M-normalized: u^T M u = 1
  double residual = 0.0;  ///< ||K u - lambda M u||_2 / ||K u||_2
  int iterations = 0;
};

struct EigenOptions {
  double tol = 1e-7;
  int max_iter = 500;
  /// 0 keeps the all-ones start; other values add a deterministic
  /// perturbation (used for restarts after stagnation).
  std::uint64_t seed = 0;
  /// Refactor once with a shift just below the current Rayleigh quotient.
  bool rayleigh_shift = false;
};

/// Sparse Cholesky factor of an SPD operator, computed once and reused.
class CholeskyFactor {
 public:
  /// Throws SolverError(Factorization) if the matrix is not positive definite.
  explicit CholeskyFactor(const SparseOperator& a);
  /// Factors a - shift * b.
  CholeskyFactor(const SparseOperator& a, const SparseOperator& b, double shift);
  ~CholeskyFactor();
  CholeskyFactor(CholeskyFactor&&) noexcept;
  CholeskyFactor& operator=(CholeskyFactor&&) noexcept;

  std::size_t size() const;
  std::vector<double> solve(std::span<const double> rhs) const;

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Inverse iteration on the pencil: solve K x = M u_k with one Cholesky
/// factorization of K, M-normalize, repeat until the Rayleigh quotient moves
/// less than tol (relative) and the residual is at most tol. The dof of
/// largest magnitude is made positive.
///
/// `start` (optional) replaces the all-ones start vector. Throws
/// SolverError(Factorization) for a singular K and
/// SolverError(NonConvergence) when max_iter is reached.
EigenResult smallest_pair(const SparseOperator& k, const SparseOperator& m, const EigenOptions& opts,
                          std::span<const double> start = {});

/// Same, reusing an existing factorization of K.
EigenResult smallest_pair(const CholeskyFactor& k_factor, const SparseOperator& k,
                          const SparseOperator& m, const EigenOptions& opts,
                          std::span<const double> start = {});

inline constexpr std::size_t kDenseReferenceLimit = 2000;

/// Dense oracle: Cholesky of M, cyclic Jacobi on L^-1 K L^-T. Independent of
/// the sparse path. Throws ContractError above kDenseReferenceLimit dofs.
EigenResult dense_reference_pair(const SparseOperator& k, const SparseOperator& m);

/// Residual ||K u - lambda M u|| / ||K u||.
double pencil_residual(const SparseOperator& k, const SparseOperator& m, std::span<const double> u,
                       double lambda);

}  // namespace buckle
