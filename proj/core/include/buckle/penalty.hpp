#pragma once

#include <vector>

#include "buckle/grid.hpp"
#include "buckle/sparse.hpp"

namespace buckle {

enum class PenaltyVariant {
  OneSided,  ///< 0 below the target volume, (m - omega0)/eps above
  TwoSided,  ///< additionally rewards undershoot with -eps (omega0 - m)
};

struct PenaltyConfig {
  double epsilon = 1.0;
  double omega0 = 1.0;
  double delta = 1e-3;  ///< support-smoothing width, in field units
  PenaltyVariant variant = PenaltyVariant::OneSided;

  /// Throws ContractError when a field is nonpositive or omega0 does not fit
  /// in the container.
  void validate(double container_volume) const;
};

struct ObjectiveValue {
  double total = 0.0;
  double rayleigh = 0.0;
  double measure = 0.0;  ///< smoothed support measure
  double penalty = 0.0;
  std::vector<double> gradient;  ///< on the dofs of the operators passed in
};

/// Volume of the cells whose largest incident |v| exceeds `threshold`.
double support_measure(const ScalarField& v, double threshold);

/// Plateaued ramp: t below 0.9, 1 above 1.1, quadratic knee in between (C^1).
double support_ramp(double t);
double support_ramp_slope(double t);

struct SmoothedMeasure {
  double value = 0.0;
  std::vector<double> gradient;  ///< per node; wall nodes are zero
};

/// Sum over cells of ramp(max incident |v| / delta) * h^dim, with the exact
/// gradient of that formula. Ties for the max go to the first corner; a
/// node at exactly zero gets a zero subgradient.
SmoothedMeasure smoothed_measure(const ScalarField& v, double delta);

double penalty_value(double measure, const PenaltyConfig& cfg);
/// One-sided derivative used by the descent: 0 at the kink m = omega0 for
/// the one-sided variant, eps (the smaller slope) for the two-sided one.
double penalty_slope(double measure, const PenaltyConfig& cfg);

/// Penalized functional on a field: Rayleigh quotient (v^T K v)/(v^T M v)
/// plus the penalty of the smoothed measure, with its gradient on the
/// operator dofs. K and M must be container operators on the field's grid.
/// Throws ContractError for a zero field.
ObjectiveValue objective(const ScalarField& v, const PenaltyConfig& cfg, const SparseOperator& k,
                         const SparseOperator& m);

/// min{2 lambda / (n omega0), (2^(2/n) - 1) lambda / omega0}.
double epsilon1(double lambda, int dim, double omega0);

/// Volume of the unit ball (1D: the interval [-1, 1]).
double unit_ball_volume(int dim);
/// First buckling eigenvalue of the unit ball. 2D: j_{1,1}^2. 1D: the
/// clamped column of length 2, 4 pi^2 / 2^2 = pi^2.
double unit_ball_buckling(int dim);
/// (omega_n / omega0)^(2/n) * unit_ball_buckling(n).
double lambda_max(int dim, double omega0);

/// First positive zero of J_1 by bisection on its power series.
double bessel_j1_first_zero();

}  // namespace buckle
