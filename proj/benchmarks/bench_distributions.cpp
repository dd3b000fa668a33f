#include <benchmark/benchmark.h>

#include "qgsim/distributions.hpp"
#include "qgsim/feasibility.hpp"

namespace {

using namespace qgsim;

void BM_HusimiGrid(benchmark::State& state) {
  const DickeKet cat = cat_state_analytic(100);
  const int points = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(husimi_grid(cat, points, points));
  state.SetItemsProcessed(state.iterations() * points * points);
}
BENCHMARK(BM_HusimiGrid)->Arg(51)->Arg(101)->Unit(benchmark::kMillisecond);

void BM_KappaMonteCarlo(benchmark::State& state) {
  const PhysicalConfig c;
  const auto samples = static_cast<std::uint64_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(kappa_monte_carlo(c, Mode::kA, Mode::kB, samples));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KappaMonteCarlo)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
