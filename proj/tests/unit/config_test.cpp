#include <gtest/gtest.h>

#include <numbers>

#include "buckle/config.hpp"
#include "buckle/error.hpp"

using namespace buckle;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const RunConfig c = parse_config("# nothing here\n\n");
  EXPECT_TRUE(c == RunConfig{});
  EXPECT_EQ(c.dim, 2);
  EXPECT_EQ(c.nodes, (std::vector<int>{129, 129}));
  EXPECT_EQ(c.omega0, std::numbers::pi);
  EXPECT_FALSE(c.epsilon.has_value());
  EXPECT_EQ(c.schedule().size(), 5u);
  EXPECT_EQ(c.grid().h(), 1.0 / 32);
}

TEST(Config, UnknownAndDuplicateKeysNameTheLine) {
  EXPECT_NE(error_of("dim = 2\nbogus = 1\n").find("line 2: unknown key 'bogus'"), std::string::npos);
  EXPECT_NE(error_of("omega0 = 1\n\nomega0 = 2\n").find("line 3"), std::string::npos);
  EXPECT_NE(error_of("no equals sign\n").find("line 1"), std::string::npos);
  EXPECT_FALSE(error_of("max_iter = ten\n").empty());
  EXPECT_FALSE(error_of("variant = sideways\n").empty());
  EXPECT_FALSE(error_of("warm_start = maybe\n").empty());
}

TEST(Config, VolumeBoundIsNamed) {
  const std::string msg = error_of("omega0 = 20\n");
  EXPECT_NE(msg.find("omega0 = 20"), std::string::npos) << msg;
  EXPECT_NE(msg.find("|B| = 16"), std::string::npos) << msg;
}

TEST(Config, OtherBoundsAreChecked) {
  EXPECT_FALSE(error_of("epsilon = -1\n").empty());
  EXPECT_FALSE(error_of("epsilon_schedule = 0.1, 0.2\n").empty());
  EXPECT_FALSE(error_of("diag_radii = 0.01\n").empty());  // below 2h at 129 nodes
  EXPECT_FALSE(error_of("nodes = 3\n").empty());
  EXPECT_FALSE(error_of("init = file\n").empty());  // needs init_file
}

TEST(Config, ShortListsBroadcast) {
  const RunConfig c = parse_config("extent = -1:1\nnodes = 33\n");
  EXPECT_EQ(c.nodes, (std::vector<int>{33, 33}));
  ASSERT_EQ(c.extent.size(), 2u);
  EXPECT_EQ(c.extent[1], (Interval{-1, 1}));
  const RunConfig d = parse_config("dim = 1\nextent = 0:2\nnodes = 65\nomega0 = 1\n");
  EXPECT_EQ(d.grid().dim(), 1);
  EXPECT_EQ(d.grid().h(), 1.0 / 32);
}

TEST(Config, SerializeRoundTrip) {
  RunConfig c = parse_config(
      "nodes = 65\nomega0 = 0.3\nepsilon_schedule = 0.5, 0.1, 0.02\nvariant = two_sided\n"
      "init = random\ninit_seed = 42\nmax_iter = 17\nstall_rel = 1e-11\nwarm_start = false\n"
      "diag_radii = 0.125, 0.25\nbumps = 12\ncheckpoint_every = 5\noutput_dir = out dir\n");
  const RunConfig back = parse_config(serialize_config(c));
  EXPECT_TRUE(back == c);
  EXPECT_EQ(back.epsilon_schedule, c.epsilon_schedule);
  EXPECT_EQ(back.variant, PenaltyVariant::TwoSided);
  EXPECT_EQ(back.init, InitKind::Random);
  EXPECT_EQ(back.init_seed, 42u);
  EXPECT_EQ(back.optimizer.max_iter, 17);
  EXPECT_EQ(back.optimizer.stall_rel, 1e-11);
  EXPECT_FALSE(back.warm_start);
  EXPECT_EQ(back.diag.radii, (std::vector<double>{0.125, 0.25}));
  EXPECT_EQ(back.output_dir, "out dir");
  EXPECT_EQ(serialize_config(back), serialize_config(c));

  c.omega0 = 0.31;
  EXPECT_FALSE(back == c);
}

TEST(Config, ReferenceListsEveryKey) {
  const std::string ref = config_reference();
  for (const char* key : {"dim", "extent", "nodes", "omega0", "epsilon", "epsilon_schedule", "variant", "init",
                          "max_iter", "eigen_tol", "diag_radii", "checkpoint_every", "output_dir"}) {
    EXPECT_NE(ref.find(key), std::string::npos) << key;
  }
}
