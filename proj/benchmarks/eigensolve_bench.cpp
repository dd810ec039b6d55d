#include <benchmark/benchmark.h>

#include "buckle/eigensolver.hpp"
#include "buckle/operators.hpp"

namespace {

// Smallest buckling pair of a unit disk, factorization included.
void BM_DiskSmallestPair(benchmark::State& state) {
  const buckle::Grid g = buckle::make_grid(2, {{-1.25, 1.25}, {-1.25, 1.25}}, static_cast<int>(state.range(0)));
  const auto mask = buckle::DomainMask::from_predicate(
      g, [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] < 1.0; });
  const auto k = buckle::assemble_bilaplacian(g, mask);
  const auto m = buckle::assemble_stiffness(g, mask);
  for (auto _ : state) benchmark::DoNotOptimize(buckle::smallest_pair(k, m, buckle::EigenOptions{}).lambda);
  state.counters["dofs"] = static_cast<double>(k.size());
}

void BM_ColumnSmallestPair(benchmark::State& state) {
  const buckle::Grid g = buckle::make_grid(1, {{0, 1}}, static_cast<int>(state.range(0)));
  const auto full = buckle::full_mask(g);
  const auto k = buckle::assemble_bilaplacian(g, full);
  const auto m = buckle::assemble_stiffness(g, full);
  for (auto _ : state) benchmark::DoNotOptimize(buckle::smallest_pair(k, m, buckle::EigenOptions{}).lambda);
}

}  // namespace

BENCHMARK(BM_DiskSmallestPair)->Arg(81)->Arg(161)->Arg(321)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ColumnSmallestPair)->Arg(129)->Arg(257)->Arg(513)->Unit(benchmark::kMicrosecond);
