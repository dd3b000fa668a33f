#include <benchmark/benchmark.h>

#include "qgsim/channels.hpp"
#include "qgsim/dicke.hpp"

namespace {

using namespace qgsim;

void BM_RotationX(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  rotation_x(n, 0.1);  // warm the J_x eigensystem cache
  double theta = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rotation_x(n, theta));
    theta += 1e-3;
  }
}
BENCHMARK(BM_RotationX)->Arg(10)->Arg(100)->Arg(500);

void BM_RotateKet(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DickeKet psi = optimal_state(n);
  for (auto _ : state) benchmark::DoNotOptimize(rotate_x(psi, 0.7));
}
BENCHMARK(BM_RotateKet)->Arg(100)->Arg(500);

void BM_OatPrepare(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const DickeKet psi = polarized_state(n);
  for (auto _ : state) benchmark::DoNotOptimize(oat_prepare(psi, TwistingSpec{}));
}
BENCHMARK(BM_OatPrepare)->Arg(100)->Arg(500);

void BM_RunExperimentDephased(benchmark::State& state) {
  ExperimentConfig c;
  c.n = static_cast<int>(state.range(0));
  c.gravity.alpha = 1e-6;
  c.gravity.beta = 1e-3;
  c.dephasing = {{DephasingGenerator::kA, 1e-6}, {DephasingGenerator::kJz, 1e-3}};
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(c));
}
BENCHMARK(BM_RunExperimentDephased)->Arg(100)->Arg(200);

}  // namespace
