#pragma once

#include <filesystem>
#include <iosfwd>
#include <mutex>
#include <string>
#include <vector>

#include "buckle/config.hpp"
#include "buckle/report.hpp"

namespace buckle {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,  ///< I/O and other unexpected errors
  kExitSolver = 2,
  kExitConfig = 3,   ///< config errors and malformed input files
};

/// Maps the library's exception types to exit codes.
int exit_code_for(const std::exception& e);

enum class PipelineMode {
  Run,    ///< epsilon continuation, warm-started as configured
  Sweep,  ///< independent cold starts from the same initial field, in parallel
};

struct PipelineOptions {
  PipelineMode mode = PipelineMode::Run;
  unsigned threads = 1;     ///< worker cap for Sweep
  std::ostream* log = nullptr;
};

/// Files created under one output directory. Everything registered here is
/// removed by discard(), along with the directory if this run created it.
class ArtifactSet {
 public:
  explicit ArtifactSet(std::filesystem::path dir);
  const std::filesystem::path& dir() const { return dir_; }
  /// Writes `content` to dir/name (via a temporary and a rename) and records
  /// it. Safe to call from several threads.
  void write(const std::string& name, const std::string& content);
  const std::vector<std::filesystem::path>& files() const { return files_; }
  void discard();

 private:
  std::filesystem::path dir_;
  bool created_dir_ = false;
  std::vector<std::filesystem::path> files_;
  std::mutex mutex_;
};

/// Optimizes, certifies and diagnoses; periodic checkpoints go to `artifacts`
/// when given. Throws on failure.
RunResult execute(const RunConfig& config, const PipelineOptions& opts, ArtifactSet* artifacts = nullptr);

/// Continues the run stored in a checkpoint (its own config, its remaining
/// schedule) and returns the combined result for the resumed part.
RunResult resume(const std::filesystem::path& checkpoint, const PipelineOptions& opts,
                 ArtifactSet* artifacts = nullptr);

/// Writes fields, masks, final checkpoints, rasters, CSV and report.json.
void write_artifacts(const RunResult& result, ArtifactSet& artifacts);

/// Full command: execute (or resume), write artifacts, remove them again on
/// failure. Errors are reported on `err`; the return value is an ExitCode.
int run_command(const RunConfig& config, const PipelineOptions& opts, std::ostream& err);
int run_command_from_file(const std::string& config_path, const PipelineOptions& opts, std::ostream& err);
int resume_command(const std::string& checkpoint_path, const PipelineOptions& opts, std::ostream& err);

/// `diagnose <field> <lambda>` and `certify <mask>`: JSON on `out`.
int diagnose_command(const std::string& field_path, const std::string& lambda, std::ostream& out,
                     std::ostream& err);
int certify_command(const std::string& mask_path, std::ostream& out, std::ostream& err);

}  // namespace buckle
