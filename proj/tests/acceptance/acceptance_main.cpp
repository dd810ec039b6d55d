// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Every tolerance used below is a named constant in this file.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "buckle/diagnostics.hpp"
#include "buckle/eigensolver.hpp"
#include "buckle/operators.hpp"
#include "buckle/optimizer.hpp"
#include "buckle/penalty.hpp"
#include "buckle/pipeline.hpp"
#include "fd_gradient.hpp"
#include "oracles.hpp"

using namespace buckle;

namespace {

constexpr double kColumnRelTol = 0.01;
constexpr double kOrderLo = 1.8;
constexpr double kOrderHi = 2.2;
constexpr double kColumnSeconds = 1.0;
constexpr double kDiskRelTol = 0.02;
constexpr double kDiskSeconds = 60.0;
constexpr double kHomothetyRelTol = 1e-2;
constexpr double kDenseRelTol = 1e-8;
constexpr int kDenseMasks = 20;
constexpr double kGradientRelTol = 1e-5;
constexpr int kGradientFields = 50;
constexpr double kEigenBoundSlackPerH = 5.0;
constexpr double kStabilityRel = 0.20;
constexpr double kBoundaryHalving = 0.5;
constexpr double kBoundaryHalvingRel = 0.30;
constexpr double kMeanValueRate = 0.95;
constexpr double kSignRate = 0.90;
constexpr double kFirstVariationRate = 0.90;
constexpr std::size_t kBumps = 100;
constexpr double kFirstVariationTol = 1e-3;

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("[%s] C%d %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double column_lambda(int n) {
  const Grid g = make_grid(1, {{0, 1}}, n);
  const DomainMask full = full_mask(g);
  return smallest_pair(assemble_bilaplacian(g, full), assemble_stiffness(g, full), EigenOptions{}).lambda;
}

DomainMask disk(const Grid& g, double r) {
  return DomainMask::from_predicate(g, [r](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] < r * r; });
}

void clamped_column() {
  const auto t0 = std::chrono::steady_clock::now();
  const double exact = oracle::clamped_column(1.0);
  const double l129 = column_lambda(129);
  const double l257 = column_lambda(257);
  const double l513 = column_lambda(513);
  const double secs = seconds_since(t0);
  const double rel = std::abs(l513 - exact) / exact;
  const double o1 = std::log2(std::abs(l129 - exact) / std::abs(l257 - exact));
  const double o2 = std::log2(std::abs(l257 - exact) / std::abs(l513 - exact));
  const auto in_range = [](double o) { return o >= kOrderLo && o <= kOrderHi; };
  report(1, "clamped column", rel <= kColumnRelTol && in_range(o1) && in_range(o2) && secs < kColumnSeconds,
         fmt("Lambda(513)=%.6f exact=%.6f rel=%.2e (<=%.2g); orders %.3f, %.3f in [%.1f,%.1f]; %.3fs (<%.0fs)", l513,
             exact, rel, kColumnRelTol, o1, o2, kOrderLo, kOrderHi, secs, kColumnSeconds));
}

void unit_disk() {
  const auto t0 = std::chrono::steady_clock::now();
  const Grid g = make_grid(2, {{-1.25, 1.25}, {-1.25, 1.25}}, 321);  // h = 1/128
  const double lambda = refine_on_mask(disk(g, 1.0)).lambda;
  const double secs = seconds_since(t0);
  const double j = oracle::j11();
  const double rel = std::abs(lambda - j * j) / (j * j);
  report(2, "unit disk", rel <= kDiskRelTol && secs < kDiskSeconds,
         fmt("Lambda=%.6f j11^2=%.6f rel=%.2e (<=%.2g); h=%.6g; %.2fs (<%.0fs)", lambda, j * j, rel, kDiskRelTol, g.h(),
             secs, kDiskSeconds));
}

void homothety() {
  const int n = 129;
  const Grid small = make_grid(2, {{-1.25, 1.25}, {-1.25, 1.25}}, n);
  const Grid large = make_grid(2, {{-2.5, 2.5}, {-2.5, 2.5}}, n);
  const double l1 = refine_on_mask(disk(small, 1.0)).lambda;
  const double l2 = refine_on_mask(disk(large, 2.0)).lambda;
  const double rel = std::abs(l1 / l2 - 4.0) / 4.0;
  report(3, "homothety", rel <= kHomothetyRelTol,
         fmt("Lambda(r=1)/Lambda(r=2)=%.12f rel=%.2e (<=%.2g); %d nodes per axis", l1 / l2, rel, kHomothetyRelTol, n));
}

void dense_equivalence() {
  const Grid g = make_grid(2, {{0, 1}, {0, 1}}, 9);  // 8x8 cells
  std::mt19937_64 rng(2024);
  std::bernoulli_distribution on(0.75);
  double worst = 0.0;
  int done = 0;
  int drawn = 0;
  while (done < kDenseMasks) {
    ++drawn;
    std::vector<std::uint8_t> cells(g.cell_count());
    for (auto& c : cells) c = on(rng) ? 1 : 0;
    const DomainMask mask(g, cells);
    const auto interior = mask.interior_nodes();
    if (std::count(interior.begin(), interior.end(), 1) == 0) continue;
    const SparseOperator k = assemble_bilaplacian(g, mask);
    const SparseOperator m = assemble_stiffness(g, mask);
    const double s = smallest_pair(k, m, EigenOptions{.tol = 1e-12, .max_iter = 5000}).lambda;
    const double d = dense_reference_pair(k, m).lambda;
    worst = std::max(worst, std::abs(s - d) / d);
    ++done;
  }
  report(4, "sparse vs dense", worst <= kDenseRelTol,
         fmt("max |dLambda|/Lambda=%.2e (<=%.0e) over %d masks (%d drawn)", worst, kDenseRelTol, done, drawn));
}

void gradient_check() {
  double worst = 0.0;
  for (int k = 0; k < kGradientFields; ++k) {
    PenaltyConfig cfg{.epsilon = 0.7, .omega0 = 1.0, .delta = 0.5};
    if (k % 2 == 1) {
      cfg.variant = PenaltyVariant::TwoSided;
      cfg.omega0 = 3.9;
    }
    worst = std::max(worst, oracle::gradient_fd_error(16, 1000 + k, cfg));
  }
  report(5, "gradient vs finite differences", worst <= kGradientRelTol,
         fmt("max relative error=%.2e (<=%.0e) over %d fields", worst, kGradientRelTol, kGradientFields));
}

struct Benchmark {
  double h = 0.0;
  RunResult result;
  double seconds = 0.0;
};

Benchmark run_benchmark(int nodes) {
  RunConfig c;  // square init, omega0 = pi, box [-2,2]^2, default schedule
  c.nodes = {nodes, nodes};
  c.diag.bumps = kBumps;
  c.diag.first_variation_tol_rel = kFirstVariationTol;
  const auto t0 = std::chrono::steady_clock::now();
  Benchmark b{c.grid().h(), execute(c, PipelineOptions{.log = &std::cerr})};
  b.seconds = seconds_since(t0);
  std::cerr << "benchmark h=" << b.h << " took " << b.seconds << " s\n";
  return b;
}

void benchmark_criteria() {
  const Benchmark coarse = run_benchmark(129);
  const Benchmark fine = run_benchmark(257);
  const double omega0 = fine.result.config.omega0;

  {
    std::string detail;
    bool pass = true;
    for (const Benchmark* b : {&coarse, &fine}) {
      std::size_t v = 0;
      double worst = 1e300;
      for (const SweepPoint& p : b->result.sweep.points) {
        const double margin = p.exact_measure - (omega0 - p.slack);
        worst = std::min(worst, margin);
        if (margin < 0) ++v;
      }
      pass = pass && v == 0;
      detail += fmt("h=%.6g: %zu violations, min(measure-omega0+slack)=%.4g; ", b->h, v, worst);
    }
    report(6, "volume saturation", pass, detail + "required 0 violations");
  }
  {
    const auto& pts = fine.result.sweep.points;
    bool pass = pts.size() >= 2;
    std::string detail;
    for (std::size_t k = pts.size() >= 2 ? pts.size() - 2 : 0; k < pts.size(); ++k) {
      const double dev = std::abs(pts[k].exact_measure - omega0);
      pass = pass && dev <= pts[k].slack;
      detail += fmt("eps=%.4g |m-omega0|=%.4g slack=%.4g; ", pts[k].epsilon, dev, pts[k].slack);
    }
    report(7, "volume equality", pass, detail);
  }
  const SweepPoint& last = fine.result.sweep.points.back();
  {
    const double bound = lambda_max(2, omega0) * (1 + kEigenBoundSlackPerH * fine.h);
    report(8, "eigenvalue bound", last.lambda_certified <= bound,
           fmt("certified=%.6f <= %.6f (lambda_max*(1+%.0fh), h=%.6g)", last.lambda_certified, bound,
               kEigenBoundSlackPerH, fine.h));
  }
  {
    const int comps = connected_components(last.mask);
    report(9, "connectedness", comps == 1, fmt("components=%d at h=%.6g", comps, fine.h));
  }
  const DiagnosticsReport& dc = *coarse.result.diagnostics;
  const DiagnosticsReport& df = *fine.result.diagnostics;
  {
    const double c0_rel = std::abs(df.c0_estimate - dc.c0_estimate) / dc.c0_estimate;
    const double c1_rel = std::abs(df.c1_estimate - dc.c1_estimate) / dc.c1_estimate;
    const bool pass = dc.c0_estimate > 0 && df.c0_estimate > 0 && dc.c1_estimate > 0 && df.c1_estimate > 0 &&
                      c0_rel <= kStabilityRel && c1_rel <= kStabilityRel;
    report(10, "nondegeneracy and density", pass,
           fmt("c0=%.4f/%.4f (drift %.1f%%), c1=%.4f/%.4f (drift %.1f%%) at h=1/32,1/64; drift <= %.0f%%",
               dc.c0_estimate, df.c0_estimate, 100 * c0_rel, dc.c1_estimate, df.c1_estimate, 100 * c1_rel,
               100 * kStabilityRel));
  }
  {
    const double fc = boundary_fraction(coarse.result.sweep.points.back().mask);
    const double ff = boundary_fraction(last.mask);
    const double ratio = ff / fc;
    const double lo = kBoundaryHalving * (1 - kBoundaryHalvingRel);
    const double hi = kBoundaryHalving * (1 + kBoundaryHalvingRel);
    report(11, "boundary fraction halves", ratio >= lo && ratio <= hi,
           fmt("fraction %.5f -> %.5f, ratio=%.3f in [%.2f,%.2f]", fc, ff, ratio, lo, hi));
  }
  {
    const bool pass = df.meanvalue_pass_rate >= kMeanValueRate && df.sign_check_pass_rate >= kSignRate;
    report(12, "mean-value and sign", pass,
           fmt("mean-value %.4f (>=%.2f, %zu tests), sign %.4f (>=%.2f, %zu cells)", df.meanvalue_pass_rate,
               kMeanValueRate, df.meanvalue.tested, df.sign_check_pass_rate, kSignRate, df.sign_check.tested));
  }
  {
    const bool pass = df.first_variation.tested == kBumps && df.first_variation_pass_rate >= kFirstVariationRate;
    report(13, "first variation", pass,
           fmt("%zu/%zu bumps pass (%.3f >= %.2f), tol %.0e*|U|inf*|Lap phi|1", df.first_variation.passed,
               df.first_variation.tested, df.first_variation_pass_rate, kFirstVariationRate, kFirstVariationTol));
  }
}

}  // namespace

int main() {
  const auto guard = [](int first, int last, auto&& body) {
    try {
      body();
    } catch (const std::exception& e) {
      for (int id = first; id <= last; ++id) report(id, "aborted", false, e.what());
    }
  };
  guard(1, 1, clamped_column);
  guard(2, 2, unit_disk);
  guard(3, 3, homothety);
  guard(4, 4, dense_equivalence);
  guard(5, 5, gradient_check);
  guard(6, 13, benchmark_criteria);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
