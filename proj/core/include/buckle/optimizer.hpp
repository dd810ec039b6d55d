#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "buckle/eigensolver.hpp"
#include "buckle/grid.hpp"
#include "buckle/penalty.hpp"
#include "buckle/sparse.hpp"

namespace buckle {

struct HistoryEntry {
  int iter = 0;
  double total = 0.0;
  double rayleigh = 0.0;
  double exact_measure = 0.0;
  double penalty = 0.0;
  bool operator==(const HistoryEntry&) const = default;
};

struct OptimizerOptions {
  int max_iter = 300;
  /// Stop after this many consecutive iterations with |dtotal| < stall_rel * total.
  int stall_iterations = 20;
  double stall_rel = 1e-9;
  /// Halvings allowed inside one iteration before declaring divergence.
  int max_backtracks = 50;
  double growth = 1.2;
  /// Exact-support threshold relative to max|u|.
  double support_rel = 1e-8;
  /// When > 0, the smoothing width is reset to delta_rel * max|u| at start().
  double delta_rel = 1e-3;
  EigenOptions eigen{};
};

/// Optimizer state. `u` is M-normalized and always the smallest eigenvector
/// of the container pencil restricted to its own support.
struct OptimizerState {
  ScalarField u;
  PenaltyConfig cfg;  ///< epsilon and delta in force
  double step = 0.0;  ///< 0 until the first iteration picks one
  int iter = 0;
  int stall = 0;
  double total = 0.0;
  bool converged = false;
  std::vector<HistoryEntry> history{};
  std::vector<double> epsilon_schedule{};
  std::uint64_t rng_seed = 0;
};

/// Descent on the penalized functional over fields on the container.
///
/// One iteration takes the gradient g of the smoothed objective, forms
/// z = u - t g and picks the trial support by a proximal hard threshold on
/// the exact measure: a support or frontier node survives when z^2 / (2 t c)
/// exceeds mu, c being the volume the node carries. Above the target volume
/// mu = 1/eps; at or below it mu is the smallest subgradient that keeps the
/// estimated volume at omega0, so cells can be traded at constant volume.
/// The trial field is the smallest eigenvector of the pencil restricted to
/// that support (running inverse iteration to convergence removes the h^-4
/// stiffness of plain descent). Accept on decrease of the exact-measure
/// functional and grow t by 1.2, otherwise halve t and retry. A trial that
/// leaves the support unchanged is a null step that also grows t.
class Minimizer {
 public:
  Minimizer(const Grid& grid, OptimizerOptions opts);

  /// Projects `init` onto its support (eigenvector there), M-normalizes it and
  /// records iteration 0. Throws ContractError for a zero or wall-touching
  /// field.
  OptimizerState start(const ScalarField& init, const PenaltyConfig& cfg) const;
  /// One iteration. Returns false, without changing the state, once the state
  /// has converged or reached max_iter.
  bool iterate(OptimizerState& state) const;
  /// Iterates to the stopping rule; `observer` runs after every iteration.
  void run(OptimizerState& state,
           const std::function<void(const OptimizerState&)>& observer = {}) const;

  const Grid& grid() const { return grid_; }
  const OptimizerOptions& options() const { return opts_; }
  const SparseOperator& stiffness_k() const { return k_; }
  const SparseOperator& stiffness_m() const { return m_; }

  /// Smallest eigenvector of the container pencil restricted to the nodes
  /// with support[node] != 0, as an M-normalized field. Small values below
  /// the support threshold are cut to exactly zero.
  ScalarField support_eigenfield(const std::vector<std::uint8_t>& support,
                                 std::span<const double> start_nodes) const;

 private:
  double merit(const ScalarField& u, const PenaltyConfig& cfg, double rayleigh) const;
  HistoryEntry record(const OptimizerState& s, double rayleigh) const;

  Grid grid_;
  OptimizerOptions opts_;
  SparseOperator k_;
  SparseOperator m_;
};

/// Convenience wrapper: start + run.
OptimizerState minimize(const ScalarField& init, const PenaltyConfig& cfg,
                        const OptimizerOptions& opts = {});

/// Eigenpair of the reflection-clamped operators assembled on `mask`: the
/// certified buckling value of an extracted domain.
EigenResult refine_on_mask(const DomainMask& mask, const EigenOptions& opts = {});

/// Smallest eigenvalue of the container pencil restricted to the interior
/// nodes of `mask` (zero exterior, no reflection): the best Rayleigh quotient
/// a field supported in the mask can reach under the relaxed operators.
EigenResult relaxed_on_mask(const Minimizer& minimizer, const DomainMask& mask);

/// Volume-overshoot balance point n omega0 / (2 lambda_max): for a ball
/// family, penalty slopes steeper than the homothetic eigenvalue gain keep
/// the support at omega0 when epsilon is below this value.
double epsilon0_estimate(int dim, double omega0);

/// Geometric schedule from 10x down to 0.1x the estimate, descending.
std::vector<double> default_epsilon_schedule(int dim, double omega0, int count = 5);

// ---------------------------------------------------------------------------

enum class InitKind { Square, Disk, Random, File };

/// Initial field: smallest eigenfunction of a centred square or disk of
/// volume omega0, or a sum of smooth random bumps (fixed seed) inside a
/// disk of volume 2 omega0.
ScalarField initial_field(const Grid& grid, InitKind kind, double omega0, std::uint64_t seed = 1);

// ---------------------------------------------------------------------------

struct SweepOptions {
  OptimizerOptions optimizer{};
  bool warm_start = true;
  /// Worker threads for cold-start sweeps (warm starts are sequential).
  unsigned threads = 1;
  /// Called with the point index after start() and after every iteration.
  /// Runs on worker threads in parallel sweeps.
  std::function<void(std::size_t, const OptimizerState&)> observer;
  /// Recorded in every state; the sweep's own epsilons when empty.
  std::vector<double> schedule;
  std::uint64_t rng_seed = 0;
};

struct SweepPoint {
  double epsilon = 0.0;
  OptimizerState state;
  DomainMask mask;
  double exact_measure = 0.0;
  double lambda_relaxed = 0.0;
  double lambda_certified = 0.0;
  double slack = 0.0;  ///< boundary-cell slack (perimeter * h) of the extracted mask
};

struct SweepReport {
  std::vector<SweepPoint> points;  ///< in schedule order (descending epsilon)
  /// Largest epsilon whose measure is within slack of omega0, and the
  /// smallest larger epsilon that overshoots (empirical epsilon0 bracket).
  std::optional<double> epsilon0_lower;
  std::optional<double> epsilon0_upper;
  std::size_t saturation_violations = 0;  ///< points with measure < omega0 - slack
  bool measure_monotone = true;           ///< informational
};

/// Extracts the support mask of a finished state and certifies it.
SweepPoint finish_point(const Minimizer& minimizer, OptimizerState state);

/// Recomputes the bracket, violation count and monotonicity flag.
void summarize_sweep(SweepReport& report, double omega0);

/// Runs minimize per epsilon (sorted descending; ContractError otherwise).
SweepReport epsilon_sweep(const Grid& grid, const PenaltyConfig& base,
                          const std::vector<double>& epsilons, const ScalarField& init,
                          const SweepOptions& opts = {});

// ---------------------------------------------------------------------------

struct Candidate {
  std::string label;
  double measure = 0.0;
  double rayleigh = 0.0;
  double value = 0.0;  ///< two-sided functional
};

struct Comparison {
  double epsilon = 0.0;
  double epsilon1 = 0.0;
  Candidate minimizer;
  std::vector<Candidate> candidates;
  bool any_lower = false;
};

/// Evaluates the two-sided functional at the final field and at the
/// eigenfunctions of shrunk supports (one and two boundary layers peeled,
/// and the homothetic quarter-volume copy). Falsification harness only.
Comparison compare_I_epsilon(const Minimizer& minimizer, const OptimizerState& final_state);

}  // namespace buckle
