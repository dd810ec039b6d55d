#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "buckle/error.hpp"
#include "buckle/io.hpp"
#include "buckle/pipeline.hpp"

using namespace buckle;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("buckle_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig small_config(const fs::path& out) {
  RunConfig c = parse_config("nodes = 33\ninit = disk\n");
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST(Pipeline, SmallDiskRunSucceedsQuickly) {
  const fs::path out = scratch("smoke");
  std::ostringstream err;
  const auto t0 = std::chrono::steady_clock::now();
  ASSERT_EQ(run_command(small_config(out), {}, err), kExitOk) << err.str();
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 10.0);
  for (const char* f : {"config.txt", "report.json", "sweep.csv", "field_final.txt", "mask_final.txt",
                        "field_final.pgm", "mask_final.pgm"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const DomainMask mask = load_mask(out / "mask_final.txt");
  EXPECT_EQ(connected_components(mask), 1);
  EXPECT_NE(slurp(out / "report.json").find("\"all_checks_pass\": true"), std::string::npos);
  fs::remove_all(out);
}

TEST(Pipeline, RerunIsByteIdentical) {
  const fs::path a = scratch("rerun_a");
  const fs::path b = scratch("rerun_b");
  std::ostringstream err;
  RunConfig ca = small_config(a);
  RunConfig cb = small_config(b);
  ASSERT_EQ(run_command(ca, {}, err), kExitOk);
  ASSERT_EQ(run_command(cb, {}, err), kExitOk);
  // The reports embed their own output_dir, so compare everything else.
  for (const char* f : {"sweep.csv", "field_final.txt", "mask_final.txt", "field_final.pgm"}) {
    EXPECT_EQ(slurp(a / f), slurp(b / f)) << f;
  }
  std::string ra = slurp(a / "report.json");
  std::string rb = slurp(b / "report.json");
  for (auto [r, tag] : {std::pair{&ra, "rerun_a"}, std::pair{&rb, "rerun_b"}}) {
    for (auto at = r->find(tag); at != std::string::npos; at = r->find(tag)) r->replace(at, 7, "rerun_x");
  }
  EXPECT_EQ(ra, rb);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Pipeline, ConfigErrorsExitWithThree) {
  RunConfig c = small_config(scratch("bad"));
  c.omega0 = 20;
  std::ostringstream err;
  EXPECT_EQ(run_command(c, {}, err), kExitConfig);
  EXPECT_NE(err.str().find("|B| = 16"), std::string::npos);
  EXPECT_EQ(run_command_from_file("/nonexistent/run.cfg", {}, err), kExitConfig);
  EXPECT_EQ(exit_code_for(FormatError("x")), kExitConfig);
  EXPECT_EQ(exit_code_for(SolverError(SolverError::Kind::Divergence, "x")), kExitSolver);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kExitFailure);
}

TEST(Pipeline, SolverFailureExitsWithTwoAndLeavesNothing) {
  const fs::path out = scratch("solver_fail");
  RunConfig c = small_config(out);
  c.optimizer.eigen.max_iter = 1;
  std::ostringstream err;
  EXPECT_EQ(run_command(c, {}, err), kExitSolver) << err.str();
  EXPECT_FALSE(fs::exists(out));
}

TEST(Pipeline, SweepModeRejectsSingleEpsilon) {
  RunConfig c = small_config(scratch("sweep_single"));
  c.epsilon = 0.1;
  EXPECT_THROW(execute(c, {.mode = PipelineMode::Sweep, .threads = 2}), ConfigError);
}

TEST(Pipeline, ParallelSweepMatchesSerialColdStarts) {
  RunConfig c = small_config(scratch("sweep"));
  c.epsilon_schedule = {1.0, 0.1};
  c.diagnostics = false;
  c.compare = false;
  const RunResult one = execute(c, {.mode = PipelineMode::Sweep, .threads = 1});
  const RunResult two = execute(c, {.mode = PipelineMode::Sweep, .threads = 2});
  ASSERT_EQ(one.sweep.points.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(one.sweep.points[k].state.history, two.sweep.points[k].state.history);
  }
}

TEST(Pipeline, DiagnoseAndCertifyCommands) {
  const fs::path out = scratch("commands");
  std::ostringstream err;
  ASSERT_EQ(run_command(small_config(out), {}, err), kExitOk);
  std::ostringstream json;
  EXPECT_EQ(diagnose_command((out / "field_final.txt").string(), "15", json, err), kExitOk) << err.str();
  EXPECT_NE(json.str().find("\"components\""), std::string::npos);
  std::ostringstream ignored;
  EXPECT_EQ(diagnose_command((out / "field_final.txt").string(), "fifteen", ignored, err), kExitConfig);
  std::ostringstream cert;
  EXPECT_EQ(certify_command((out / "mask_final.txt").string(), cert, err), kExitOk) << err.str();
  EXPECT_NE(cert.str().find("buckle-certify/1"), std::string::npos);
  EXPECT_NE(cert.str().find("\"ball_ratio\""), std::string::npos);
  EXPECT_EQ(certify_command((out / "missing.txt").string(), cert, err), kExitConfig);
  fs::remove_all(out);
}

TEST(Pipeline, ResumeFromPeriodicCheckpointMatchesStraightRun) {
  RunConfig c = small_config(scratch("resume"));
  c.epsilon_schedule = {0.5, 0.05};
  c.optimizer.max_iter = 20;
  c.checkpoint_every = 7;
  c.compare = false;
  const RunResult straight = execute(c, {});

  ArtifactSet artifacts(c.output_dir);
  execute(c, {}, &artifacts);
  // checkpoint_0 now holds the last multiple of 7 reached at the first epsilon.
  const fs::path ckpt = fs::path(c.output_dir) / "checkpoint_0.ckpt";
  ASSERT_TRUE(fs::exists(ckpt));
  const RunResult resumed = resume(ckpt, {});
  EXPECT_TRUE(resumed.resumed);
  ASSERT_EQ(resumed.sweep.points.size(), straight.sweep.points.size());
  for (std::size_t k = 0; k < straight.sweep.points.size(); ++k) {
    const auto& a = straight.sweep.points[k].state;
    const auto& b = resumed.sweep.points[k].state;
    EXPECT_EQ(a.history.back(), b.history.back()) << k;
    for (std::size_t i = 0; i < a.u.size(); ++i) ASSERT_EQ(a.u[i], b.u[i]) << k;
  }
  artifacts.discard();
  EXPECT_FALSE(fs::exists(c.output_dir));
}
