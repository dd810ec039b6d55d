#include "buckle/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "buckle/diagnostics.hpp"
#include "buckle/error.hpp"
#include "buckle/operators.hpp"

namespace buckle {
namespace {

double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

std::vector<std::size_t> selected_dofs(const SparseOperator& op, const std::vector<std::uint8_t>& nodes) {
  const auto d2n = op.dof_to_node();
  std::vector<std::size_t> dofs;
  for (std::size_t d = 0; d < d2n.size(); ++d) {
    if (nodes[d2n[d]]) dofs.push_back(d);
  }
  return dofs;
}

Point grid_center(const Grid& g) {
  Point c{};
  for (int a = 0; a < g.dim(); ++a) c[a] = 0.5 * (g.extent()[a].lo + g.extent()[a].hi);
  return c;
}

ScalarField mask_eigenfield(const DomainMask& mask) {
  const SparseOperator k = assemble_bilaplacian(mask.grid(), mask);
  const SparseOperator m = assemble_stiffness(mask.grid(), mask);
  const EigenResult r = smallest_pair(k, m, EigenOptions{});
  return to_field(k, mask.grid(), r.u);
}

}  // namespace

Minimizer::Minimizer(const Grid& grid, OptimizerOptions opts)
    : grid_(grid),
      opts_(opts),
      k_(assemble_bilaplacian(grid, full_mask(grid))),
      m_(assemble_stiffness(grid, full_mask(grid))) {
  if (opts_.max_iter < 0 || opts_.stall_iterations < 1 || opts_.max_backtracks < 1) {
    throw ContractError("optimizer: iteration limits must be positive");
  }
  if (!(opts_.growth > 1.0) || !(opts_.stall_rel > 0.0) || !(opts_.support_rel > 0.0)) {
    throw ContractError("optimizer: growth must exceed 1 and tolerances must be > 0");
  }
}

ScalarField Minimizer::support_eigenfield(const std::vector<std::uint8_t>& support,
                                          std::span<const double> start_nodes) const {
  const auto dofs = selected_dofs(k_, support);
  if (dofs.empty()) throw SolverError(SolverError::Kind::EmptyDomain, "optimizer: empty support");
  const SparseOperator kr = k_.restricted(dofs);
  const SparseOperator mr = m_.restricted(dofs);
  std::vector<double> start;
  if (!start_nodes.empty()) {
    const auto d2n = kr.dof_to_node();
    start.resize(d2n.size());
    for (std::size_t j = 0; j < d2n.size(); ++j) start[j] = start_nodes[d2n[j]];
    if (max_abs(start) == 0.0) start.clear();
  }
  const EigenResult r = smallest_pair(kr, mr, opts_.eigen, start);

  std::vector<double> x(k_.size(), 0.0);
  for (std::size_t j = 0; j < dofs.size(); ++j) x[dofs[j]] = r.u[j];
  const double cut = opts_.support_rel * max_abs(x);
  for (double& v : x) {
    if (std::abs(v) <= cut) v = 0.0;
  }
  const double s = 1.0 / std::sqrt(quadratic_form(m_, x));
  for (double& v : x) v *= s;
  return to_field(k_, grid_, x);
}

double Minimizer::merit(const ScalarField& u, const PenaltyConfig& cfg, double rayleigh) const {
  return rayleigh + penalty_value(support_measure(u, opts_.support_rel * u.max_abs()), cfg);
}

HistoryEntry Minimizer::record(const OptimizerState& s, double rayleigh) const {
  HistoryEntry e;
  e.iter = s.iter;
  e.rayleigh = rayleigh;
  e.exact_measure = support_measure(s.u, opts_.support_rel * s.u.max_abs());
  e.penalty = penalty_value(e.exact_measure, s.cfg);
  e.total = e.rayleigh + e.penalty;
  return e;
}

OptimizerState Minimizer::start(const ScalarField& init, const PenaltyConfig& cfg) const {
  if (!(init.grid() == grid_)) throw ContractError("optimizer: initial field lives on another grid");
  const double vmax = init.max_abs();
  if (vmax == 0.0) throw ContractError("optimizer: initial field is identically zero");
  std::vector<std::uint8_t> support(grid_.node_count(), 0);
  for (std::size_t i = 0; i < support.size(); ++i) {
    support[i] = std::abs(init[i]) > opts_.support_rel * vmax ? 1 : 0;
  }
  OptimizerState s{support_eigenfield(support, init.values()), cfg};
  if (opts_.delta_rel > 0.0) s.cfg.delta = opts_.delta_rel * s.u.max_abs();
  s.cfg.validate(grid_.container_volume());
  const ObjectiveValue v = objective(s.u, s.cfg, k_, m_);
  s.history.push_back(record(s, v.rayleigh));
  s.total = s.history.back().total;
  return s;
}

namespace {

// Volume each node is charged for in the proximal step. A support node on
// the edge of the support owns an equal share of every active cell whose
// support corners all lie on that edge (those cells vanish when the edge is
// peeled). A frontier node (outside, face-adjacent to the support) owns an
// equal share of each inactive incident cell among that cell's frontier
// corners.
struct VolumeShares {
  std::vector<double> cost;
  std::vector<std::uint8_t> frontier;
};

VolumeShares volume_shares(const Grid& g, const std::vector<std::uint8_t>& support) {
  VolumeShares out;
  out.cost.assign(g.node_count(), 0.0);
  out.frontier.assign(g.node_count(), 0);
  std::vector<std::uint8_t> edge(g.node_count(), 0);
  for (std::size_t i = 0; i < g.node_count(); ++i) {
    if (g.on_wall(i)) continue;
    const MultiIndex m = g.node_multi(i);
    bool touches_in = false;
    bool touches_out = false;
    for (int a = 0; a < g.dim(); ++a) {
      for (int off : {-1, 1}) {
        MultiIndex q = m;
        q[a] += off;
        (support[g.node_flat(q)] ? touches_in : touches_out) = true;
      }
    }
    if (support[i]) {
      edge[i] = touches_out ? 1 : 0;
    } else {
      out.frontier[i] = touches_in ? 1 : 0;
    }
  }
  const double vol = g.cell_volume();
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    const auto corners = g.cell_corners(c);
    int in = 0;
    int in_edge = 0;
    int front = 0;
    for (auto n : corners) {
      in += support[n];
      in_edge += edge[n];
      front += out.frontier[n];
    }
    if (in > 0 && in == in_edge) {
      for (auto n : corners) {
        if (support[n]) out.cost[n] += vol / in;
      }
    } else if (in == 0 && front > 0) {
      for (auto n : corners) {
        if (out.frontier[n]) out.cost[n] += vol / front;
      }
    }
  }
  return out;
}

}  // namespace

bool Minimizer::iterate(OptimizerState& s) const {
  if (s.converged || s.iter >= opts_.max_iter) return false;
  const ObjectiveValue cur = objective(s.u, s.cfg, k_, m_);
  const double cur_total = merit(s.u, s.cfg, cur.rayleigh);
  const double gmax = max_abs(cur.gradient);
  if (gmax == 0.0) {
    s.converged = true;
    return false;
  }
  if (!(s.step > 0.0)) s.step = 1.0 / gmax;

  const auto x = to_dofs(k_, s.u);
  const double cut = opts_.support_rel * max_abs(x);
  const std::size_t n = x.size();
  const auto d2n = k_.dof_to_node();
  std::vector<std::uint8_t> current(grid_.node_count(), 0);
  for (std::size_t d = 0; d < n; ++d) current[d2n[d]] = x[d] != 0.0 ? 1 : 0;
  const VolumeShares shares = volume_shares(grid_, current);

  // Proximal threshold: a node is charged mu times its volume share. Above
  // the target volume mu is the penalty slope 1/eps. At or below it, any mu
  // in the subdifferential [left slope, 1/eps] is admissible; the smallest
  // one whose estimated trial volume stays at omega0 is used, which lets a
  // step trade cells at constant volume.
  const double m_now = s.history.back().exact_measure;
  const double hi = 1.0 / s.cfg.epsilon;
  const double lo = m_now > s.cfg.omega0 ? hi : (s.cfg.variant == PenaltyVariant::TwoSided ? s.cfg.epsilon : 0.0);

  OptimizerState next = s;
  double change = 0.0;
  double after = cur.rayleigh;
  double after_total = cur_total;
  bool done = false;
  std::vector<double> w(grid_.node_count(), 0.0);
  std::vector<double> ratio(n, 0.0);
  std::vector<std::uint8_t> forced(n, 0);
  std::vector<std::uint8_t> support(grid_.node_count(), 0);
  for (int bt = 0; bt < opts_.max_backtracks && !done; ++bt) {
    const double t = next.step;
    for (std::size_t d = 0; d < n; ++d) {
      const double z = x[d] - t * cur.gradient[d];
      const std::size_t node = d2n[d];
      w[node] = z;
      const double c = shares.cost[node];
      ratio[d] = c > 0.0 ? z * z / (2.0 * t * c) : std::numeric_limits<double>::infinity();
      if (current[node]) {
        forced[d] = !(z * x[d] > 0.0 && std::abs(z) > cut);
      } else {
        forced[d] = !(shares.frontier[node] && std::abs(z) > cut);
      }
    }
    auto volume_after = [&](double mu) {
      double m = m_now;
      for (std::size_t d = 0; d < n; ++d) {
        const double c = shares.cost[d2n[d]];
        if (current[d2n[d]]) {
          if (forced[d] || ratio[d] <= mu) m -= c;
        } else if (!forced[d] && ratio[d] > mu) {
          m += c;
        }
      }
      return m;
    };
    double mu = hi;
    if (lo < hi && volume_after(hi) <= s.cfg.omega0) {
      if (volume_after(lo) <= s.cfg.omega0) {
        mu = lo;
      } else {
        double a = std::max(lo, hi * 1e-12);
        double b = hi;
        for (int k = 0; k < 60; ++k) {
          const double mid = std::sqrt(a * b);
          (volume_after(mid) <= s.cfg.omega0 ? b : a) = mid;
        }
        mu = b;
      }
    }
    bool same = true;
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t node = d2n[d];
      const bool keep = !forced[d] && ratio[d] > mu;
      support[node] = keep ? 1 : 0;
      same = same && keep == static_cast<bool>(current[node]);
    }
    if (same) {
      next.step *= opts_.growth;
      done = true;
      break;
    }
    try {
      ScalarField cand = support_eigenfield(support, w);
      const ObjectiveValue val = objective(cand, s.cfg, k_, m_);
      const double cand_total = merit(cand, s.cfg, val.rayleigh);
      if (cand_total < cur_total) {
        change = cur_total - cand_total;
        next.u = std::move(cand);
        next.step *= opts_.growth;
        after = val.rayleigh;
        after_total = cand_total;
        done = true;
        break;
      }
    } catch (const SolverError&) {
      // empty or unsolvable trial support: treat like an increase
    }
    next.step *= 0.5;
  }
  if (!done) {
    std::ostringstream msg;
    msg << "optimizer: no decrease after " << opts_.max_backtracks << " backtracks (iter " << s.iter
        << ", total " << cur_total << ", step " << next.step << ", epsilon " << s.cfg.epsilon << ")";
    throw SolverError(SolverError::Kind::Divergence, msg.str());
  }

  next.iter = s.iter + 1;
  next.total = after_total;
  next.stall = change < opts_.stall_rel * std::abs(after_total) ? s.stall + 1 : 0;
  next.converged = next.stall >= opts_.stall_iterations;
  next.history.push_back(record(next, after));
  s = std::move(next);
  return true;
}

void Minimizer::run(OptimizerState& state,
                    const std::function<void(const OptimizerState&)>& observer) const {
  while (iterate(state)) {
    if (observer) observer(state);
  }
}

OptimizerState minimize(const ScalarField& init, const PenaltyConfig& cfg, const OptimizerOptions& opts) {
  const Minimizer mz(init.grid(), opts);
  OptimizerState s = mz.start(init, cfg);
  mz.run(s);
  return s;
}

EigenResult refine_on_mask(const DomainMask& mask, const EigenOptions& opts) {
  if (mask.empty()) throw SolverError(SolverError::Kind::EmptyDomain, "refine_on_mask: empty mask");
  const SparseOperator k = assemble_bilaplacian(mask.grid(), mask);
  const SparseOperator m = assemble_stiffness(mask.grid(), mask);
  return smallest_pair(k, m, opts);
}

EigenResult relaxed_on_mask(const Minimizer& minimizer, const DomainMask& mask) {
  if (!(mask.grid() == minimizer.grid())) throw ContractError("relaxed_on_mask: grid mismatch");
  const auto dofs = selected_dofs(minimizer.stiffness_k(), mask.interior_nodes());
  if (dofs.empty()) throw SolverError(SolverError::Kind::EmptyDomain, "relaxed_on_mask: no interior node");
  return smallest_pair(minimizer.stiffness_k().restricted(dofs), minimizer.stiffness_m().restricted(dofs),
                       minimizer.options().eigen);
}

double epsilon0_estimate(int dim, double omega0) {
  return dim * omega0 / (2.0 * lambda_max(dim, omega0));
}

std::vector<double> default_epsilon_schedule(int dim, double omega0, int count) {
  if (count < 2) throw ContractError("epsilon schedule: need at least two points");
  const double e0 = epsilon0_estimate(dim, omega0);
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(e0 * std::pow(10.0, 1.0 - 2.0 * k / (count - 1)));
  return out;
}

ScalarField initial_field(const Grid& grid, InitKind kind, double omega0, std::uint64_t seed) {
  if (!(omega0 > 0.0 && omega0 < grid.container_volume())) {
    throw ContractError("initial_field: omega0 must lie in (0, container volume)");
  }
  const int dim = grid.dim();
  const Point c = grid_center(grid);
  switch (kind) {
    case InitKind::Square: {
      const double half = 0.5 * std::pow(omega0, 1.0 / dim);
      return mask_eigenfield(DomainMask::from_predicate(grid, [&](std::span<const double> x) {
        for (int a = 0; a < dim; ++a) {
          if (std::abs(x[a] - c[a]) >= half) return false;
        }
        return true;
      }));
    }
    case InitKind::Disk: {
      const double r = std::pow(omega0 / unit_ball_volume(dim), 1.0 / dim);
      return mask_eigenfield(DomainMask::from_predicate(grid, [&](std::span<const double> x) {
        double d = 0.0;
        for (int a = 0; a < dim; ++a) d += (x[a] - c[a]) * (x[a] - c[a]);
        return d < r * r;
      }));
    }
    case InitKind::Random: {
      const double big = std::pow(2.0 * omega0 / unit_ball_volume(dim), 1.0 / dim);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      struct Blob {
        Point c;
        double rho;
        double amp;
      };
      std::vector<Blob> blobs;
      for (int k = 0; k < 6; ++k) {
        Blob b{};
        const double rad = 0.6 * big * std::pow(unit(rng), 1.0 / dim);
        const double ang = 2.0 * std::numbers::pi * unit(rng);
        b.c = c;
        b.c[0] += dim == 1 ? rad * (ang < std::numbers::pi ? 1.0 : -1.0) : rad * std::cos(ang);
        if (dim >= 2) b.c[1] += rad * std::sin(ang);
        b.rho = big * (0.3 + 0.3 * unit(rng));
        b.amp = 0.5 + unit(rng);
        blobs.push_back(b);
      }
      return ScalarField::sample(grid, [&](std::span<const double> x) {
        double v = 0.0;
        for (const Blob& b : blobs) {
          double d = 0.0;
          for (int a = 0; a < dim; ++a) d += (x[a] - b.c[a]) * (x[a] - b.c[a]);
          const double s = 1.0 - d / (b.rho * b.rho);
          if (s > 0.0) v += b.amp * s * s * s;
        }
        return v;
      });
    }
    case InitKind::File:
      break;
  }
  throw ContractError("initial_field: file initialisation is handled by the field loader");
}

// ---------------------------------------------------------------------------

SweepPoint finish_point(const Minimizer& mz, OptimizerState state) {
  const DomainMask mask = extract_support(state.u, mz.options().support_rel * state.u.max_abs());
  const double certified = refine_on_mask(mask, mz.options().eigen).lambda;
  SweepPoint p{state.cfg.epsilon, std::move(state), mask};
  p.exact_measure = mask.volume();
  p.lambda_relaxed = p.state.history.back().rayleigh;
  p.lambda_certified = certified;
  p.slack = boundary_slack(mask);
  return p;
}

void summarize_sweep(SweepReport& rep, double omega0) {
  rep.saturation_violations = 0;
  rep.measure_monotone = true;
  rep.epsilon0_lower.reset();
  rep.epsilon0_upper.reset();
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    const SweepPoint& p = rep.points[k];
    if (p.exact_measure < omega0 - p.slack) ++rep.saturation_violations;
    if (k > 0 && p.exact_measure > rep.points[k - 1].exact_measure + p.slack) rep.measure_monotone = false;
  }
  for (std::size_t k = 0; k < rep.points.size(); ++k) {
    const SweepPoint& p = rep.points[k];
    if (p.exact_measure <= omega0 + p.slack) {
      rep.epsilon0_lower = p.epsilon;
      if (k > 0) rep.epsilon0_upper = rep.points[k - 1].epsilon;
      break;
    }
  }
}

SweepReport epsilon_sweep(const Grid& grid, const PenaltyConfig& base, const std::vector<double>& epsilons,
                          const ScalarField& init, const SweepOptions& opts) {
  if (epsilons.empty()) throw ContractError("epsilon_sweep: empty schedule");
  for (std::size_t k = 1; k < epsilons.size(); ++k) {
    if (!(epsilons[k] < epsilons[k - 1])) throw ContractError("epsilon_sweep: schedule must be sorted descending");
  }
  const Minimizer mz(grid, opts.optimizer);
  const std::vector<double>& schedule = opts.schedule.empty() ? epsilons : opts.schedule;

  auto solve = [&](std::size_t k, const ScalarField& from) {
    PenaltyConfig cfg = base;
    cfg.epsilon = epsilons[k];
    OptimizerState s = mz.start(from, cfg);
    s.epsilon_schedule = schedule;
    s.rng_seed = opts.rng_seed;
    if (opts.observer) {
      opts.observer(k, s);
      mz.run(s, [&](const OptimizerState& st) { opts.observer(k, st); });
    } else {
      mz.run(s);
    }
    return finish_point(mz, std::move(s));
  };

  std::vector<std::optional<SweepPoint>> slots(epsilons.size());
  if (opts.warm_start || opts.threads <= 1) {
    const ScalarField* from = &init;
    for (std::size_t k = 0; k < epsilons.size(); ++k) {
      slots[k] = solve(k, *from);
      if (opts.warm_start) from = &slots[k]->state.u;
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    const unsigned workers = std::min<unsigned>(opts.threads, static_cast<unsigned>(epsilons.size()));
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < epsilons.size(); k = next++) {
          try {
            slots[k] = solve(k, init);
          } catch (...) {
            const std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  SweepReport rep;
  for (auto& s : slots) rep.points.push_back(std::move(*s));
  summarize_sweep(rep, base.omega0);
  return rep;
}

// ---------------------------------------------------------------------------

Comparison compare_I_epsilon(const Minimizer& mz, const OptimizerState& final_state) {
  const Grid& g = mz.grid();
  PenaltyConfig cfg = final_state.cfg;
  cfg.variant = PenaltyVariant::TwoSided;
  const double rel = mz.options().support_rel;

  auto evaluate = [&](const std::string& label, const ScalarField& v) {
    Candidate c;
    c.label = label;
    const auto x = to_dofs(mz.stiffness_k(), v);
    c.rayleigh = quadratic_form(mz.stiffness_k(), x) / quadratic_form(mz.stiffness_m(), x);
    c.measure = support_measure(v, rel * v.max_abs());
    c.value = c.rayleigh + penalty_value(c.measure, cfg);
    return c;
  };

  Comparison out;
  out.epsilon = cfg.epsilon;
  out.minimizer = evaluate("minimizer", final_state.u);
  out.epsilon1 = epsilon1(out.minimizer.rayleigh, g.dim(), cfg.omega0);

  std::vector<std::uint8_t> support(g.node_count(), 0);
  for (std::size_t i = 0; i < support.size(); ++i) support[i] = final_state.u[i] != 0.0 ? 1 : 0;

  auto peel = [&](const std::vector<std::uint8_t>& s) {
    std::vector<std::uint8_t> out_s(s);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!s[i]) continue;
      const MultiIndex m = g.node_multi(i);
      for (int a = 0; a < g.dim(); ++a) {
        for (int off : {-1, 1}) {
          MultiIndex q = m;
          q[a] += off;
          if (q[a] < 0 || q[a] >= g.nodes(a) || !s[g.node_flat(q)]) out_s[i] = 0;
        }
      }
    }
    return out_s;
  };
  auto try_candidate = [&](const std::string& label, const std::vector<std::uint8_t>& s) {
    try {
      out.candidates.push_back(evaluate(label, mz.support_eigenfield(s, final_state.u.values())));
    } catch (const SolverError&) {
      // nothing left after shrinking
    }
  };
  const auto one = peel(support);
  try_candidate("peel-1", one);
  try_candidate("peel-2", peel(one));

  // Homothetic copy with a quarter of the volume, about the support centroid.
  Point centroid{};
  double count = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!support[i]) continue;
    const MultiIndex m = g.node_multi(i);
    for (int a = 0; a < g.dim(); ++a) centroid[a] += m[a];
    count += 1.0;
  }
  for (int a = 0; a < g.dim(); ++a) centroid[a] /= count;
  const double t = std::pow(4.0, 1.0 / g.dim());
  std::vector<std::uint8_t> quarter(g.node_count(), 0);
  for (std::size_t i = 0; i < quarter.size(); ++i) {
    const MultiIndex m = g.node_multi(i);
    MultiIndex q{0, 0, 0};
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a) {
      q[a] = static_cast<int>(std::lround(centroid[a] + t * (m[a] - centroid[a])));
      inside = inside && q[a] >= 0 && q[a] < g.nodes(a);
    }
    quarter[i] = inside && support[g.node_flat(q)] ? 1 : 0;
  }
  try_candidate("quarter-volume", quarter);

  for (const Candidate& c : out.candidates) out.any_lower = out.any_lower || c.value < out.minimizer.value;
  return out;
}

}  // namespace buckle
