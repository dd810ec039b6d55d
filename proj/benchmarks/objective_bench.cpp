#include <benchmark/benchmark.h>

#include <numbers>

#include "buckle/operators.hpp"
#include "buckle/optimizer.hpp"
#include "buckle/penalty.hpp"

namespace {

void BM_Objective(benchmark::State& state) {
  const buckle::Grid g = buckle::make_grid(2, {{-2, 2}, {-2, 2}}, static_cast<int>(state.range(0)));
  const auto full = buckle::full_mask(g);
  const auto k = buckle::assemble_bilaplacian(g, full);
  const auto m = buckle::assemble_stiffness(g, full);
  const auto v = buckle::initial_field(g, buckle::InitKind::Disk, std::numbers::pi);
  const buckle::PenaltyConfig cfg{.epsilon = 0.1, .omega0 = std::numbers::pi, .delta = 1e-3 * v.max_abs()};
  for (auto _ : state) benchmark::DoNotOptimize(buckle::objective(v, cfg, k, m).total);
}

// One descent iteration on the default benchmark container.
void BM_OptimizerIteration(benchmark::State& state) {
  const buckle::Grid g = buckle::make_grid(2, {{-2, 2}, {-2, 2}}, static_cast<int>(state.range(0)));
  const buckle::Minimizer mz(g, {});
  const buckle::PenaltyConfig cfg{.epsilon = 0.1, .omega0 = std::numbers::pi};
  const auto start = mz.start(buckle::initial_field(g, buckle::InitKind::Square, std::numbers::pi), cfg);
  for (auto _ : state) {
    state.PauseTiming();
    buckle::OptimizerState s = start;
    state.ResumeTiming();
    benchmark::DoNotOptimize(mz.iterate(s));
  }
}

}  // namespace

BENCHMARK(BM_Objective)->Arg(65)->Arg(129)->Arg(257)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OptimizerIteration)->Arg(65)->Arg(129)->Unit(benchmark::kMillisecond);
