#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "buckle/error.hpp"
#include "buckle/operators.hpp"
#include "buckle/penalty.hpp"
#include "fd_gradient.hpp"
#include "oracles.hpp"

using namespace buckle;

TEST(Penalty, OneSidedAndTwoSidedValues) {
  PenaltyConfig c{.epsilon = 0.5, .omega0 = 2.0};
  EXPECT_EQ(penalty_value(1.0, c), 0.0);
  EXPECT_EQ(penalty_value(2.0, c), 0.0);
  EXPECT_DOUBLE_EQ(penalty_value(3.0, c), 2.0);
  EXPECT_EQ(penalty_slope(1.0, c), 0.0);
  EXPECT_EQ(penalty_slope(3.0, c), 2.0);
  c.variant = PenaltyVariant::TwoSided;
  EXPECT_DOUBLE_EQ(penalty_value(1.0, c), -0.5);
  EXPECT_EQ(penalty_value(2.0, c), 0.0);
  EXPECT_EQ(penalty_slope(1.0, c), 0.5);
}

TEST(Penalty, ConfigValidation) {
  EXPECT_THROW((PenaltyConfig{.epsilon = 0.0}).validate(10.0), ContractError);
  EXPECT_THROW((PenaltyConfig{.omega0 = 10.0}).validate(10.0), ContractError);
  EXPECT_NO_THROW((PenaltyConfig{.omega0 = 9.0}).validate(10.0));
}

TEST(Penalty, RampIsContinuouslyDifferentiable) {
  for (double t : {0.9, 1.1}) {
    const double e = 1e-7;
    EXPECT_NEAR(support_ramp(t - e), support_ramp(t + e), 1e-6);
    EXPECT_NEAR(support_ramp_slope(t - e), support_ramp_slope(t + e), 1e-5);
    EXPECT_NEAR((support_ramp(t + e) - support_ramp(t - e)) / (2 * e), support_ramp_slope(t), 1e-6);
  }
  EXPECT_EQ(support_ramp(2.0), 1.0);
  EXPECT_EQ(support_ramp(0.5), 0.5);
}

TEST(Penalty, ExactMeasureCountsCellsStrictlyAboveThreshold) {
  const Grid g = make_grid(2, {{0, 1}, {0, 1}}, 9);
  std::vector<double> v(g.node_count(), 0.0);
  v[g.node_flat({4, 4, 0})] = 1.0;
  const ScalarField f(g, v);
  EXPECT_DOUBLE_EQ(support_measure(f, 0.0), 4 * g.cell_volume());
  EXPECT_DOUBLE_EQ(support_measure(f, 1.0), 0.0);  // tie stays inactive
}

TEST(Penalty, SmoothedMeasureMatchesExactAwayFromKnee) {
  const Grid g = make_grid(2, {{0, 1}, {0, 1}}, 9);
  std::vector<double> v(g.node_count(), 0.0);
  v[g.node_flat({3, 4, 0})] = 2.0;
  v[g.node_flat({5, 4, 0})] = -3.0;
  const ScalarField f(g, v);
  const SmoothedMeasure s = smoothed_measure(f, 1.0);
  EXPECT_DOUBLE_EQ(s.value, support_measure(f, 0.0));
  for (double gi : s.gradient) EXPECT_EQ(gi, 0.0);
}

TEST(Penalty, ObjectiveRejectsZeroField) {
  const Grid g = make_grid(2, {{0, 1}, {0, 1}}, 9);
  const SparseOperator k = assemble_bilaplacian(g, full_mask(g));
  const SparseOperator m = assemble_stiffness(g, full_mask(g));
  EXPECT_THROW(objective(ScalarField(g), PenaltyConfig{}, k, m), ContractError);
}

TEST(Penalty, GradientMatchesCentralDifferences) {
  const PenaltyConfig one{.epsilon = 0.7, .omega0 = 1.0, .delta = 0.5};
  PenaltyConfig two = one;
  two.variant = PenaltyVariant::TwoSided;
  two.omega0 = 3.9;  // above the smoothed measure, so the reward branch is active
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    EXPECT_LE(oracle::gradient_fd_error(16, seed, one), 1e-5);
    EXPECT_LE(oracle::gradient_fd_error(16, seed + 10, two), 1e-5);
  }
}

TEST(Penalty, Epsilon1Formula) {
  EXPECT_DOUBLE_EQ(epsilon1(10.0, 2, 2.0), 5.0);
  EXPECT_DOUBLE_EQ(epsilon1(10.0, 1, 2.0), 10.0);  // min(10, 15)
  EXPECT_NEAR(epsilon1(10.0, 3, 2.0), (std::pow(2.0, 2.0 / 3.0) - 1) * 5.0, 1e-14);
}

TEST(Penalty, BallQuantities) {
  const double j = oracle::j11();
  EXPECT_NEAR(j, oracle::kJ11Table, 1e-10);
  EXPECT_NEAR(bessel_j1_first_zero(), j, 1e-12);
  EXPECT_DOUBLE_EQ(unit_ball_volume(2), std::numbers::pi);
  EXPECT_NEAR(lambda_max(2, std::numbers::pi), j * j, 1e-10);
  // scaling the volume by 4 doubles the radius and quarters the eigenvalue
  EXPECT_NEAR(lambda_max(2, 4 * std::numbers::pi), j * j / 4, 1e-10);
  EXPECT_NEAR(lambda_max(1, 2.0), std::numbers::pi * std::numbers::pi, 1e-12);
  EXPECT_NEAR(lambda_max(1, 1.0), oracle::clamped_column(1.0), 1e-12);
}
