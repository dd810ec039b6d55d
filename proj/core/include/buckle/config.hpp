#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "buckle/diagnostics.hpp"
#include "buckle/grid.hpp"
#include "buckle/optimizer.hpp"
#include "buckle/penalty.hpp"

namespace buckle {

/// Everything one pipeline run needs. Text form is `key = value` lines with
/// `#` comments; see config_reference() for the key list.
struct RunConfig {
  int dim = 2;
  std::vector<Interval> extent{{-2.0, 2.0}, {-2.0, 2.0}};
  std::vector<int> nodes{129, 129};

  double omega0 = 3.141592653589793;
  /// Single-epsilon run when set; otherwise the schedule below.
  std::optional<double> epsilon;
  /// Descending; empty means the default geometric schedule.
  std::vector<double> epsilon_schedule;
  int schedule_points = 5;
  PenaltyVariant variant = PenaltyVariant::OneSided;

  InitKind init = InitKind::Square;
  std::uint64_t init_seed = 1;
  std::string init_file;

  OptimizerOptions optimizer{};
  bool warm_start = true;

  bool diagnostics = true;
  bool compare = true;  ///< two-sided comparison harness on the last point
  DiagnosticsOptions diag{};

  int checkpoint_every = 0;  ///< 0: final checkpoints only
  std::string output_dir = "buckle-out";

  bool operator==(const RunConfig&) const;

  Grid grid() const;
  /// Schedule in force (the single epsilon, the explicit list, or the default).
  std::vector<double> schedule() const;
  /// Throws ConfigError naming the first violated bound.
  void validate() const;
};

/// Parses config text. Unknown or repeated keys, malformed values and
/// violated bounds raise ConfigError. Keys left out keep their defaults;
/// `extent`/`nodes` given as one entry apply to every axis.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Every key, in a fixed order, reals in shortest round-trip form:
/// parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& c);

/// One line per key: name, default, meaning.
std::string config_reference();

}  // namespace buckle
