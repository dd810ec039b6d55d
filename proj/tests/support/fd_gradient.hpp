#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "buckle/operators.hpp"
#include "buckle/penalty.hpp"

namespace oracle {

/// Largest |analytic - central difference| over the dofs, divided by the
/// largest |analytic| entry, for one random field on an n x n grid.
inline double gradient_fd_error(int n, std::uint64_t seed, const buckle::PenaltyConfig& cfg) {
  using namespace buckle;
  const Grid g = make_grid(2, {{-1, 1}, {-1, 1}}, n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  const ScalarField v = ScalarField::sample(g, [&](std::span<const double>) { return u(rng); });
  const SparseOperator k = assemble_bilaplacian(g, full_mask(g));
  const SparseOperator m = assemble_stiffness(g, full_mask(g));
  const ObjectiveValue base = objective(v, cfg, k, m);

  const auto d2n = k.dof_to_node();
  std::vector<double> vals(v.values().begin(), v.values().end());
  double worst = 0.0;
  double scale = 0.0;
  for (double gd : base.gradient) scale = std::max(scale, std::abs(gd));
  for (std::size_t d = 0; d < d2n.size(); ++d) {
    const std::size_t node = d2n[d];
    const double x0 = vals[node];
    const double step = 1e-6 * std::max(1.0, std::abs(x0));
    vals[node] = x0 + step;
    const double fp = objective(ScalarField(g, vals), cfg, k, m).total;
    vals[node] = x0 - step;
    const double fm = objective(ScalarField(g, vals), cfg, k, m).total;
    vals[node] = x0;
    worst = std::max(worst, std::abs((fp - fm) / (2 * step) - base.gradient[d]));
  }
  return worst / scale;
}

}  // namespace oracle
