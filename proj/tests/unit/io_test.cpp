#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "buckle/error.hpp"
#include "buckle/io.hpp"

using namespace buckle;

namespace {

ScalarField random_field(const Grid& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  return ScalarField::sample(g, [&](std::span<const double>) { return u(rng) * std::exp(u(rng) / 50); });
}

}  // namespace

TEST(Io, RealsRoundTripExactly) {
  for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, std::numeric_limits<double>::denorm_min()}) {
    EXPECT_EQ(parse_real(format_real(x), "x"), x);
  }
  EXPECT_EQ(format_real(1e-9), "1e-09");
  EXPECT_THROW(parse_real("1.5abc", "x"), FormatError);
  EXPECT_THROW(parse_real("", "x"), FormatError);
}

TEST(Io, FieldRoundTripIsBitExact) {
  const Grid g(2, {{-2, 2}, {-1.5, 1.5}}, {17, 13});
  const ScalarField v = random_field(g, 5);
  std::stringstream ss;
  write_field(ss, v);
  const ScalarField back = read_field(ss, 2);
  EXPECT_TRUE(back.grid() == g);
  for (std::size_t i = 0; i < v.size(); ++i) ASSERT_EQ(back[i], v[i]);
}

TEST(Io, DimensionMismatchNamesBothValues) {
  const Grid g = make_grid(1, {{0, 1}}, 9);
  std::stringstream ss;
  write_field(ss, random_field(g, 1));
  try {
    read_field(ss, 2);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("expected 2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("got 1"), std::string::npos) << msg;
  }
}

TEST(Io, MalformedInputsAreRejected) {
  for (const char* text : {"", "BUCKLE-MASK v1 dim=1 nodes=9 extent=0:1\n",
                           "BUCKLE-FIELD v2 dim=1 nodes=9 extent=0:1\n",
                           "BUCKLE-FIELD v1 dim=1 nodes=9\n",
                           "BUCKLE-FIELD v1 dim=1 nodes=5 extent=0:1\n0\n1\n2\n",
                           "BUCKLE-FIELD v1 dim=1 nodes=5 extent=0:1\n0\n1\nx\n1\n0\n",
                           "BUCKLE-FIELD v1 dim=1 nodes=5 extent=0:1\n1\n1\n1\n1\n0\n"}) {
    std::istringstream in(text);
    EXPECT_THROW(read_field(in), FormatError) << text;
  }
}

TEST(Io, MaskRoundTrip) {
  const Grid g = make_grid(2, {{-1, 1}, {-1, 1}}, 17);
  const DomainMask m = DomainMask::from_predicate(g, [](std::span<const double> x) { return x[0] * x[1] > 0.1; });
  std::stringstream ss;
  write_mask(ss, m);
  const DomainMask back = read_mask(ss);
  ASSERT_TRUE(back.grid() == g);
  for (std::size_t c = 0; c < g.cell_count(); ++c) ASSERT_EQ(back.active(c), m.active(c));

  std::istringstream bad("BUCKLE-MASK v1 dim=1 nodes=5 extent=0:1\n0120\n");
  EXPECT_THROW(read_mask(bad), FormatError);
}

TEST(Io, CheckpointRoundTrip) {
  const Grid g = make_grid(2, {{-1, 1}, {-1, 1}}, 9);
  OptimizerState s{random_field(g, 3), PenaltyConfig{0.3, 1.25, 1e-4, PenaltyVariant::TwoSided}};
  s.step = 0.1 / 3;
  s.iter = 7;
  s.stall = 2;
  s.total = 12.5;
  s.converged = true;
  s.history = {{0, 14.0, 13.0, 1.5, 1.0}, {7, 12.5, 12.0, 1.3, 0.5}};
  s.epsilon_schedule = {1.0, 0.3, 0.1};
  s.rng_seed = 99;
  const std::string config = "dim = 2\n# comment\nomega0 = 1.25\n";

  std::stringstream ss;
  write_checkpoint(ss, s, config);
  const Checkpoint c = read_checkpoint(ss);
  EXPECT_EQ(c.config_text, config);
  EXPECT_EQ(c.state.cfg.epsilon, 0.3);
  EXPECT_EQ(c.state.cfg.omega0, 1.25);
  EXPECT_EQ(c.state.cfg.delta, 1e-4);
  EXPECT_EQ(c.state.cfg.variant, PenaltyVariant::TwoSided);
  EXPECT_EQ(c.state.step, s.step);
  EXPECT_EQ(c.state.iter, 7);
  EXPECT_EQ(c.state.stall, 2);
  EXPECT_EQ(c.state.total, 12.5);
  EXPECT_TRUE(c.state.converged);
  EXPECT_EQ(c.state.history, s.history);
  EXPECT_EQ(c.state.epsilon_schedule, s.epsilon_schedule);
  EXPECT_EQ(c.state.rng_seed, 99u);
  for (std::size_t i = 0; i < s.u.size(); ++i) ASSERT_EQ(c.state.u[i], s.u[i]);

  std::istringstream truncated(ss.str().substr(0, 40));
  EXPECT_THROW(read_checkpoint(truncated), FormatError);
}

TEST(Io, PgmHeaderAndSize) {
  const Grid g = make_grid(2, {{-1, 1}, {-1, 1}}, 9);
  std::ostringstream field_out;
  write_pgm(field_out, random_field(g, 2));
  EXPECT_EQ(field_out.str().rfind("P5\n9 9\n255\n", 0), 0u);
  EXPECT_EQ(field_out.str().size(), std::string("P5\n9 9\n255\n").size() + 81);

  std::ostringstream mask_out;
  write_pgm(mask_out, DomainMask(g));
  EXPECT_EQ(mask_out.str().rfind("P5\n8 8\n255\n", 0), 0u);

  std::ostringstream one_d;
  EXPECT_THROW(write_pgm(one_d, ScalarField(make_grid(1, {{0, 1}}, 9))), ContractError);
}

TEST(Io, MissingFileIsFormatError) {
  EXPECT_THROW(load_field("/nonexistent/field.txt"), FormatError);
  EXPECT_THROW(load_mask("/nonexistent/mask.txt"), FormatError);
}
