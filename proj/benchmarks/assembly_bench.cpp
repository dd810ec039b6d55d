#include <benchmark/benchmark.h>

#include "buckle/operators.hpp"

namespace {

buckle::DomainMask disk_mask(const buckle::Grid& g) {
  return buckle::DomainMask::from_predicate(
      g, [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] < 1.0; });
}

void BM_AssembleBilaplacian(benchmark::State& state) {
  const buckle::Grid g = buckle::make_grid(2, {{-2, 2}, {-2, 2}}, static_cast<int>(state.range(0)));
  const buckle::DomainMask mask = disk_mask(g);
  for (auto _ : state) benchmark::DoNotOptimize(buckle::assemble_bilaplacian(g, mask));
  state.SetComplexityN(state.range(0) * state.range(0));
}

void BM_AssembleStiffness(benchmark::State& state) {
  const buckle::Grid g = buckle::make_grid(2, {{-2, 2}, {-2, 2}}, static_cast<int>(state.range(0)));
  const buckle::DomainMask mask = disk_mask(g);
  for (auto _ : state) benchmark::DoNotOptimize(buckle::assemble_stiffness(g, mask));
}

}  // namespace

BENCHMARK(BM_AssembleBilaplacian)->Arg(65)->Arg(129)->Arg(257)->Unit(benchmark::kMillisecond)->Complexity();
BENCHMARK(BM_AssembleStiffness)->Arg(65)->Arg(129)->Arg(257)->Unit(benchmark::kMillisecond);
