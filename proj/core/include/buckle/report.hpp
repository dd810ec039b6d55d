#pragma once

#include <optional>
#include <string>
#include <vector>

#include "buckle/config.hpp"
#include "buckle/diagnostics.hpp"
#include "buckle/eigensolver.hpp"
#include "buckle/optimizer.hpp"

namespace buckle {

/// A quantitative check with the value, the bound it is held to, the verdict
/// and a short statement of the property being checked.
struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string anchor;
};

/// Cheap per-point geometry, filled for every sweep point.
struct PointSummary {
  int components = 0;
  double c0 = 0.0;
  double c1 = 0.0;
  double relaxed_on_mask = 0.0;
};

struct RunResult {
  RunConfig config;
  SweepReport sweep;
  std::vector<PointSummary> summaries;  ///< parallel to sweep.points
  std::optional<DiagnosticsReport> diagnostics;
  std::optional<Comparison> comparison;
  std::vector<std::string> warnings;
  bool resumed = false;
};

/// Checks on the final point and on the sweep as a whole.
std::vector<Check> run_checks(const RunResult& r);

/// Canonical report: sorted keys, two-space indent, shortest round-trip
/// reals, no timestamps, so reruns are byte-identical.
std::string report_json(const RunResult& r);

/// `epsilon,measure,lambda_relaxed,lambda_certified,components,c0,c1`.
std::string sweep_csv(const RunResult& r);

/// Standalone reports for the diagnose and certify commands.
std::string diagnostics_json(const DiagnosticsReport& d);
std::string certify_json(const DomainMask& mask, const EigenResult& e, int components);

}  // namespace buckle
