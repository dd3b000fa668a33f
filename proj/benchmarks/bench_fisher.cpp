#include <benchmark/benchmark.h>

#include <iterator>
#include <vector>

#include "qgsim/fisher.hpp"

namespace {

using namespace qgsim;

const std::vector<ParameterId> kAll(std::begin(kAllParameters), std::end(kAllParameters));
const std::vector<ParameterId> kAlphaBeta = {ParameterId::kAlpha, ParameterId::kBeta};

ExperimentConfig base(int n, Recombiner r) {
  ExperimentConfig c;
  c.n = n;
  c.recombiner = r;
  return figure_mode_base(c, true);
}

void BM_ProbabilityDerivatives(benchmark::State& state) {
  const ExperimentConfig c = base(static_cast<int>(state.range(0)), Recombiner::kU0);
  for (auto _ : state) benchmark::DoNotOptimize(prob_derivatives_analytic(c, kAll));
}
BENCHMARK(BM_ProbabilityDerivatives)->Arg(50)->Arg(100)->Arg(200);

void BM_CfiN100(benchmark::State& state) {
  const ExperimentConfig c = base(100, state.range(0) ? Recombiner::kU0 : Recombiner::kU0Dagger);
  for (auto _ : state) benchmark::DoNotOptimize(cfi_matrix(prob_derivatives_analytic(c, kAll)));
}
BENCHMARK(BM_CfiN100)->Arg(0)->Arg(1);

void BM_CfiFromTable(benchmark::State& state) {
  const ProbabilityTable t = prob_derivatives_analytic(base(100, Recombiner::kU0), kAll);
  for (auto _ : state) benchmark::DoNotOptimize(cfi_matrix(t));
}
BENCHMARK(BM_CfiFromTable);

void BM_QfiPure(benchmark::State& state) {
  const DickeKet psi = cat_state_analytic(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(qfi_pure(psi, kAlphaBeta));
}
BENCHMARK(BM_QfiPure)->Arg(100)->Arg(500);

}  // namespace
