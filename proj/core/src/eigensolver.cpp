#include "buckle/eigensolver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "buckle/error.hpp"

namespace buckle {

using EigenSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

struct CholeskyFactor::Impl {
  Eigen::SimplicialLLT<EigenSparse, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
  std::size_t n = 0;
};

namespace {

EigenSparse to_eigen(const SparseOperator& a, const SparseOperator* b, double shift) {
  const std::size_t n = a.size();
  std::vector<Eigen::Triplet<double, int>> trips;
  trips.reserve(a.nonzeros() + (b ? b->nonzeros() : 0));
  auto push = [&](const SparseOperator& op, double scale) {
    const auto rp = op.row_ptr();
    const auto cols = op.cols();
    const auto vals = op.values();
    for (std::size_t r = 0; r < op.size(); ++r) {
      for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) {
        if (cols[k] < r) continue;  // lower triangle in column-major = upper rows here
        trips.emplace_back(static_cast<int>(cols[k]), static_cast<int>(r), scale * vals[k]);
      }
    }
  };
  push(a, 1.0);
  if (b != nullptr) push(*b, -shift);
  EigenSparse m(static_cast<int>(n), static_cast<int>(n));
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

void factor_into(CholeskyFactor::Impl& impl, const EigenSparse& m) {
  impl.n = static_cast<std::size_t>(m.rows());
  impl.llt.compute(m);
  if (impl.llt.info() != Eigen::Success) {
    throw SolverError(SolverError::Kind::Factorization,
                      "cholesky: operator is not positive definite (degenerate mask?)");
  }
}

// splitmix64: deterministic perturbation stream for restarts.
double perturbation(std::uint64_t seed, std::size_t i) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (i + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<double>(z >> 11) * 0x1.0p-53 - 0.5;
}

void fix_sign(std::vector<double>& u) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (std::abs(u[i]) > std::abs(u[best])) best = i;
  }
  if (!u.empty() && u[best] < 0.0) {
    for (double& x : u) x = -x;
  }
}

}  // namespace

CholeskyFactor::CholeskyFactor(const SparseOperator& a) : impl_(std::make_unique<Impl>()) {
  factor_into(*impl_, to_eigen(a, nullptr, 0.0));
}

CholeskyFactor::CholeskyFactor(const SparseOperator& a, const SparseOperator& b, double shift)
    : impl_(std::make_unique<Impl>()) {
  if (a.size() != b.size()) throw ContractError("cholesky: pencil size mismatch");
  factor_into(*impl_, to_eigen(a, &b, shift));
}

CholeskyFactor::~CholeskyFactor() = default;
CholeskyFactor::CholeskyFactor(CholeskyFactor&&) noexcept = default;
CholeskyFactor& CholeskyFactor::operator=(CholeskyFactor&&) noexcept = default;

std::size_t CholeskyFactor::size() const { return impl_->n; }

std::vector<double> CholeskyFactor::solve(std::span<const double> rhs) const {
  if (rhs.size() != impl_->n) throw ContractError("cholesky: rhs size mismatch");
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  Eigen::VectorXd x = impl_->llt.solve(b);
  return {x.data(), x.data() + x.size()};
}

double pencil_residual(const SparseOperator& k, const SparseOperator& m, std::span<const double> u,
                       double lambda) {
  const auto ku = buckle::apply(k, u);
  const auto mu = buckle::apply(m, u);
  double num = 0.0;
  for (std::size_t i = 0; i < ku.size(); ++i) {
    const double r = ku[i] - lambda * mu[i];
    num += r * r;
  }
  const double den = norm2(ku);
  return den > 0.0 ? std::sqrt(num) / den : std::sqrt(num);
}

EigenResult smallest_pair(const SparseOperator& k, const SparseOperator& m, const EigenOptions& opts,
                          std::span<const double> start) {
  const CholeskyFactor factor(k);
  return smallest_pair(factor, k, m, opts, start);
}

EigenResult smallest_pair(const CholeskyFactor& k_factor, const SparseOperator& k,
                          const SparseOperator& m, const EigenOptions& opts,
                          std::span<const double> start) {
  const std::size_t n = k.size();
  if (m.size() != n || k_factor.size() != n) throw ContractError("smallest_pair: size mismatch");
  if (n == 0) throw SolverError(SolverError::Kind::EmptyDomain, "smallest_pair: no dofs");
  if (!(opts.tol > 0.0 && opts.tol <= 1e-2)) throw ContractError("smallest_pair: tol must be in (0, 1e-2]");
  if (!start.empty() && start.size() != n) throw ContractError("smallest_pair: start vector size mismatch");

  std::vector<double> u(n, 1.0);
  if (!start.empty()) u.assign(start.begin(), start.end());
  if (opts.seed != 0) {
    for (std::size_t i = 0; i < n; ++i) u[i] += 1e-3 * perturbation(opts.seed, i);
  }
  auto mu = buckle::apply(m, u);
  double mnorm2 = dot(u, mu);
  if (!(mnorm2 > 0.0)) {
    u.assign(n, 1.0);
    mu = buckle::apply(m, u);
    mnorm2 = dot(u, mu);
  }
  auto normalize = [&](std::vector<double>& x, std::vector<double>& mx) {
    const double s = 1.0 / std::sqrt(dot(x, mx));
    for (std::size_t i = 0; i < n; ++i) {
      x[i] *= s;
      mx[i] *= s;
    }
  };
  normalize(u, mu);
  double rho = quadratic_form(k, u);

  std::unique_ptr<CholeskyFactor> shifted;
  const CholeskyFactor* solver = &k_factor;
  EigenResult res;
  for (int it = 1; it <= opts.max_iter; ++it) {
    u = solver->solve(mu);
    mu = buckle::apply(m, u);
    normalize(u, mu);
    const auto ku = buckle::apply(k, u);
    const double rho_new = dot(u, ku);
    double rnum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = ku[i] - rho_new * mu[i];
      rnum += r * r;
    }
    const double residual = std::sqrt(rnum) / norm2(ku);
    const bool stagnated = std::abs(rho_new - rho) <= opts.tol * std::abs(rho_new);
    rho = rho_new;
    if (stagnated && residual <= opts.tol) {
      fix_sign(u);
      res.lambda = rho;
      res.u = std::move(u);
      res.residual = residual;
      res.iterations = it;
      return res;
    }
    if (opts.rayleigh_shift && !shifted && residual < 1e-2) {
      try {
        shifted = std::make_unique<CholeskyFactor>(k, m, 0.9 * rho);
        solver = shifted.get();
      } catch (const SolverError&) {
        // shift landed past the smallest eigenvalue; stay unshifted
      }
    }
    res.residual = residual;
  }
  std::ostringstream msg;
  msg << "smallest_pair: no convergence after " << opts.max_iter
      << " iterations (residual " << res.residual << ")";
  throw SolverError(SolverError::Kind::NonConvergence, msg.str());
}

// ---------------------------------------------------------------------------
// Dense oracle. Deliberately self-contained (no Eigen).

namespace {

using Dense = std::vector<double>;  // row-major n x n

Dense densify(const SparseOperator& op) {
  const std::size_t n = op.size();
  Dense a(n * n, 0.0);
  const auto rp = op.row_ptr();
  const auto cols = op.cols();
  const auto vals = op.values();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t k = rp[r]; k < rp[r + 1]; ++k) a[r * n + cols[k]] = vals[k];
  }
  return a;
}

void dense_cholesky(Dense& a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) {
      throw SolverError(SolverError::Kind::Factorization, "dense_reference_pair: M not positive definite");
    }
    const double ljj = std::sqrt(d);
    a[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / ljj;
    }
    for (std::size_t i = 0; i < j; ++i) a[i * n + j] = 0.0;
  }
}

void jacobi_eigen(Dense& a, Dense& v, std::size_t n) {
  v.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  double total = 0.0;
  for (double x : a) total += x * x;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) off += a[p * n + q] * a[p * n + q];
    }
    if (off <= 1e-32 * total) return;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
}

}  // namespace

EigenResult dense_reference_pair(const SparseOperator& k, const SparseOperator& m) {
  const std::size_t n = k.size();
  if (m.size() != n) throw ContractError("dense_reference_pair: size mismatch");
  if (n == 0) throw SolverError(SolverError::Kind::EmptyDomain, "dense_reference_pair: no dofs");
  if (n > kDenseReferenceLimit) {
    std::ostringstream msg;
    msg << "dense_reference_pair: " << n << " dofs exceeds the limit of " << kDenseReferenceLimit;
    throw ContractError(msg.str());
  }
  Dense l = densify(m);
  dense_cholesky(l, n);
  Dense kd = densify(k);

  // X = L^-1 K (columns by forward substitution), then C = L^-1 X^T.
  Dense x(n * n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = kd[i * n + col];
      for (std::size_t j = 0; j < i; ++j) s -= l[i * n + j] * x[j * n + col];
      x[i * n + col] = s / l[i * n + i];
    }
  }
  Dense c(n * n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x[col * n + i];
      for (std::size_t j = 0; j < i; ++j) s -= l[i * n + j] * c[j * n + col];
      c[i * n + col] = s / l[i * n + i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (c[i * n + j] + c[j * n + i]);
      c[i * n + j] = avg;
      c[j * n + i] = avg;
    }
  }
  Dense v;
  jacobi_eigen(c, v, n);
  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (c[i * n + i] < c[best * n + best]) best = i;
  }
  // u = L^-T y
  std::vector<double> u(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = v[ii * n + best];
    for (std::size_t j = ii + 1; j < n; ++j) s -= l[j * n + ii] * u[j];
    u[ii] = s / l[ii * n + ii];
  }
  const double scale = 1.0 / std::sqrt(quadratic_form(m, u));
  for (double& xi : u) xi *= scale;
  fix_sign(u);

  EigenResult res;
  res.lambda = c[best * n + best];
  res.residual = pencil_residual(k, m, u, res.lambda);
  res.u = std::move(u);
  res.iterations = 0;
  return res;
}

}  // namespace buckle
