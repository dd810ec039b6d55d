#include "buckle/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

#include "buckle/error.hpp"
#include "buckle/io.hpp"

namespace fs = std::filesystem;

namespace buckle {

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const SolverError*>(&e)) return kExitSolver;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const FormatError*>(&e)) return kExitConfig;
  return kExitFailure;
}

ArtifactSet::ArtifactSet(fs::path dir) : dir_(std::move(dir)) {
  if (!fs::exists(dir_)) {
    fs::create_directories(dir_);
    created_dir_ = true;
  } else if (!fs::is_directory(dir_)) {
    throw ConfigError("output_dir '" + dir_.string() + "' exists and is not a directory");
  }
}

void ArtifactSet::write(const std::string& name, const std::string& content) {
  const fs::path target = dir_ / name;
  const fs::path tmp = dir_ / (name + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw Error("cannot write '" + tmp.string() + "'");
    os << content;
    if (!os) throw Error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, target);
  const std::lock_guard lock(mutex_);
  if (std::find(files_.begin(), files_.end(), target) == files_.end()) files_.push_back(target);
}

void ArtifactSet::discard() {
  const std::lock_guard lock(mutex_);
  std::error_code ec;
  for (const auto& f : files_) {
    fs::remove(f, ec);
    fs::remove(fs::path(f.string() + ".tmp"), ec);
  }
  files_.clear();
  if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
}

namespace {

std::string point_name(const char* stem, std::size_t k, const char* ext) {
  std::ostringstream s;
  s << stem << '_' << k << ext;
  return s.str();
}

std::string to_text(const auto& writer_fn) {
  std::ostringstream os;
  writer_fn(os);
  return os.str();
}

ScalarField make_init(const RunConfig& c, const Grid& g) {
  if (c.init != InitKind::File) return initial_field(g, c.init, c.omega0, c.init_seed);
  ScalarField v = load_field(c.init_file, c.dim);
  if (!(v.grid() == g)) throw ConfigError("init_file '" + c.init_file + "' lives on a different grid than the config");
  return v;
}

PenaltyConfig base_penalty(const RunConfig& c) {
  PenaltyConfig p;
  p.omega0 = c.omega0;
  p.variant = c.variant;
  p.epsilon = c.schedule().front();
  return p;
}

DiagnosticsOptions diag_options(const RunConfig& c) {
  DiagnosticsOptions d = c.diag;
  d.support_rel = c.optimizer.support_rel;
  return d;
}

// Distance from the nearest active cell centre to the container wall.
double wall_distance(const DomainMask& mask) {
  const Grid& g = mask.grid();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < g.cell_count(); ++c) {
    if (!mask.active(c)) continue;
    const MultiIndex m = g.cell_multi(c);
    for (int a = 0; a < g.dim(); ++a) {
      const double x = g.cell_center(a, m[a]);
      best = std::min({best, x - g.extent()[a].lo, g.extent()[a].hi - x});
    }
  }
  return best;
}

// Summaries, diagnostics and the comparison for a finished sweep.
void complete(RunResult& r, const Minimizer& mz, const PipelineOptions& opts) {
  const RunConfig& c = r.config;
  summarize_sweep(r.sweep, c.omega0);
  r.summaries.clear();
  for (const SweepPoint& p : r.sweep.points) {
    PointSummary s;
    s.components = connected_components(p.mask);
    s.c0 = nondegeneracy_estimate(p.state.u, p.mask, c.diag.radii).c0;
    s.c1 = density_estimate(p.mask, c.diag.radii).c1;
    s.relaxed_on_mask = relaxed_on_mask(mz, p.mask).lambda;
    r.summaries.push_back(s);
  }
  const SweepPoint& last = r.sweep.points.back();
  const Grid& g = mz.grid();
  const double wall = wall_distance(last.mask);
  if (wall < 4.0 * g.h()) {
    r.warnings.push_back("final domain comes within " + format_real(wall) + " of the container wall (< 4h = " +
                         format_real(4.0 * g.h()) + "); enlarge the container");
  }
  if (!last.state.converged) {
    r.warnings.push_back("last epsilon stopped at max_iter without meeting the stall criterion");
  }
  if (c.diagnostics) r.diagnostics = diagnose(last.state.u, last.lambda_relaxed, diag_options(c));
  if (c.compare) r.comparison = compare_I_epsilon(mz, last.state);
  if (opts.log) {
    for (const auto& w : r.warnings) *opts.log << "warning: " << w << '\n';
  }
}

void log_point(const PipelineOptions& opts, const SweepPoint& p) {
  if (!opts.log) return;
  *opts.log << "epsilon=" << format_real(p.epsilon) << " iterations=" << p.state.iter
            << " converged=" << (p.state.converged ? "yes" : "no") << " measure=" << format_real(p.exact_measure)
            << " lambda_relaxed=" << format_real(p.lambda_relaxed)
            << " lambda_certified=" << format_real(p.lambda_certified) << '\n';
}

std::function<void(std::size_t, const OptimizerState&)> checkpoint_observer(const RunConfig& c,
                                                                           ArtifactSet* artifacts,
                                                                           std::size_t offset) {
  if (!artifacts || c.checkpoint_every <= 0) return {};
  const std::string text = serialize_config(c);
  return [=](std::size_t k, const OptimizerState& s) {
    if (s.iter > 0 && s.iter % c.checkpoint_every == 0) {
      artifacts->write(point_name("checkpoint", k + offset, ".ckpt"),
                       to_text([&](std::ostream& os) { write_checkpoint(os, s, text); }));
    }
  };
}

SweepOptions sweep_options(const RunConfig& c, const PipelineOptions& opts) {
  SweepOptions so;
  so.optimizer = c.optimizer;
  so.warm_start = opts.mode == PipelineMode::Run ? c.warm_start : false;
  so.threads = opts.mode == PipelineMode::Sweep ? std::max(1u, opts.threads) : 1u;
  so.schedule = c.schedule();
  so.rng_seed = c.init_seed;
  return so;
}

}  // namespace

RunResult execute(const RunConfig& config, const PipelineOptions& opts, ArtifactSet* artifacts) {
  config.validate();
  if (opts.mode == PipelineMode::Sweep && config.epsilon) {
    throw ConfigError("sweep needs a schedule: set epsilon_schedule (or leave it at default) instead of epsilon");
  }
  const Grid g = config.grid();
  const ScalarField init = make_init(config, g);
  SweepOptions so = sweep_options(config, opts);
  so.observer = checkpoint_observer(config, artifacts, 0);

  RunResult r;
  r.config = config;
  r.sweep = epsilon_sweep(g, base_penalty(config), so.schedule, init, so);
  for (const auto& p : r.sweep.points) log_point(opts, p);
  const Minimizer mz(g, config.optimizer);
  complete(r, mz, opts);
  return r;
}

RunResult resume(const fs::path& checkpoint, const PipelineOptions& opts, ArtifactSet* artifacts) {
  std::ifstream is(checkpoint, std::ios::binary);
  if (!is) throw FormatError("cannot open checkpoint '" + checkpoint.string() + "'");
  Checkpoint ck = read_checkpoint(is);
  const RunConfig config = parse_config(ck.config_text);
  const Grid g = config.grid();
  if (!(ck.state.u.grid() == g)) throw FormatError("checkpoint field does not match its config grid");

  const std::vector<double> schedule = ck.state.epsilon_schedule;
  const auto here = std::find(schedule.begin(), schedule.end(), ck.state.cfg.epsilon);
  if (here == schedule.end()) throw FormatError("checkpoint epsilon is not in its own schedule");
  const std::size_t index = static_cast<std::size_t>(here - schedule.begin());

  const Minimizer mz(g, config.optimizer);
  auto observer = checkpoint_observer(config, artifacts, 0);
  OptimizerState s = std::move(ck.state);
  if (observer) {
    mz.run(s, [&](const OptimizerState& st) { observer(index, st); });
  } else {
    mz.run(s);
  }

  RunResult r;
  r.config = config;
  r.resumed = true;
  r.sweep.points.push_back(finish_point(mz, std::move(s)));
  log_point(opts, r.sweep.points.back());

  const std::vector<double> rest(schedule.begin() + static_cast<std::ptrdiff_t>(index) + 1, schedule.end());
  if (!rest.empty()) {
    SweepOptions so = sweep_options(config, PipelineOptions{PipelineMode::Run, 1, nullptr});
    so.schedule = schedule;
    so.observer = checkpoint_observer(config, artifacts, index + 1);
    PenaltyConfig base = r.sweep.points.back().state.cfg;
    const ScalarField& from = config.warm_start ? r.sweep.points.back().state.u : make_init(config, g);
    SweepReport tail = epsilon_sweep(g, base, rest, from, so);
    for (auto& p : tail.points) {
      log_point(opts, p);
      r.sweep.points.push_back(std::move(p));
    }
  }
  complete(r, mz, opts);
  return r;
}

void write_artifacts(const RunResult& r, ArtifactSet& out) {
  const std::string config_text = serialize_config(r.config);
  out.write("config.txt", config_text);
  const auto& schedule = r.sweep.points.front().state.epsilon_schedule;
  for (const SweepPoint& p : r.sweep.points) {
    const auto at = std::find(schedule.begin(), schedule.end(), p.epsilon);
    const std::size_t k = static_cast<std::size_t>(at - schedule.begin());
    out.write(point_name("field", k, ".txt"), to_text([&](std::ostream& os) { write_field(os, p.state.u); }));
    out.write(point_name("mask", k, ".txt"), to_text([&](std::ostream& os) { write_mask(os, p.mask); }));
    out.write(point_name("checkpoint", k, ".ckpt"),
              to_text([&](std::ostream& os) { write_checkpoint(os, p.state, config_text); }));
  }
  const SweepPoint& last = r.sweep.points.back();
  out.write("field_final.txt", to_text([&](std::ostream& os) { write_field(os, last.state.u); }));
  out.write("mask_final.txt", to_text([&](std::ostream& os) { write_mask(os, last.mask); }));
  if (last.mask.grid().dim() == 2) {
    out.write("field_final.pgm", to_text([&](std::ostream& os) { write_pgm(os, last.state.u); }));
    out.write("mask_final.pgm", to_text([&](std::ostream& os) { write_pgm(os, last.mask); }));
  }
  if (!r.config.epsilon) out.write("sweep.csv", sweep_csv(r));
  out.write("report.json", report_json(r));
}

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

int run_with_artifacts(const fs::path& dir, std::ostream& err,
                       const std::function<RunResult(ArtifactSet*)>& compute) {
  std::optional<ArtifactSet> artifacts;
  try {
    artifacts.emplace(dir);
    const RunResult r = compute(&*artifacts);
    write_artifacts(r, *artifacts);
    return kExitOk;
  } catch (const std::exception& e) {
    if (artifacts) artifacts->discard();
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace

int run_command(const RunConfig& config, const PipelineOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    config.validate();
    return run_with_artifacts(config.output_dir, err,
                              [&](ArtifactSet* a) { return execute(config, opts, a); });
  });
}

int run_command_from_file(const std::string& config_path, const PipelineOptions& opts, std::ostream& err) {
  return guarded(err, [&] { return run_command(load_config(config_path), opts, err); });
}

int resume_command(const std::string& checkpoint_path, const PipelineOptions& opts, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream is(checkpoint_path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint '" + checkpoint_path + "'");
    const RunConfig config = parse_config(read_checkpoint(is).config_text);
    return run_with_artifacts(config.output_dir, err,
                              [&](ArtifactSet* a) { return resume(checkpoint_path, opts, a); });
  });
}

int diagnose_command(const std::string& field_path, const std::string& lambda, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    double lam = 0.0;
    try {
      lam = parse_real(lambda, "lambda");
    } catch (const FormatError& e) {
      throw ConfigError(e.what());
    }
    if (!(lam > 0.0)) throw ConfigError("lambda must be > 0");
    const ScalarField v = load_field(field_path);
    out << diagnostics_json(diagnose(v, lam));
    return static_cast<int>(kExitOk);
  });
}

int certify_command(const std::string& mask_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const DomainMask mask = load_mask(mask_path);
    const EigenResult e = refine_on_mask(mask);
    out << certify_json(mask, e, connected_components(mask));
    return static_cast<int>(kExitOk);
  });
}

}  // namespace buckle
