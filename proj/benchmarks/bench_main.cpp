#include <benchmark/benchmark.h>

#include "npjive/debias.hpp"
#include "npjive/kernel.hpp"
#include "npjive/npjive.hpp"
#include "npjive/simulate.hpp"

namespace {

npjive::SimulatedExperiment make_experiment(int num_arms, int per_arm) {
  npjive::ContinuousDgpParams params;
  params.num_arms = num_arms;
  params.per_arm = per_arm;
  params.novel_rows = 200;
  params.seed = 7;
  return npjive::dgp_continuous(params);
}

void BM_Gram(benchmark::State& state) {
  const auto experiment = make_experiment(50, 30);
  const Eigen::MatrixXd centers = npjive::choose_centers(experiment.historical.S, 10, 3);
  const npjive::KernelSpec kernel{0.25, 1};
  for (auto _ : state)
    benchmark::DoNotOptimize(npjive::gram(experiment.historical.S, centers, kernel));
}
BENCHMARK(BM_Gram);

void BM_FitNpjive(benchmark::State& state) {
  const auto experiment = make_experiment(static_cast<int>(state.range(0)), 30);
  const auto folded = npjive::assign_folds(experiment.historical, 2, 11);
  npjive::FitConfig cfg = npjive::default_fit_config_for(30);
  for (auto _ : state) benchmark::DoNotOptimize(npjive::fit_npjive(folded, cfg));
}
BENCHMARK(BM_FitNpjive)->Arg(25)->Arg(100)->Arg(400);

void BM_JackknifeShared(benchmark::State& state) {
  const auto experiment = make_experiment(100, 50);
  npjive::DebiasConfig cfg;
  cfg.dictionary_size = 50;
  const auto ws = npjive::make_qa_workspace(experiment.historical, nullptr, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(npjive::jackknife_diagonal_fast(ws, experiment.historical));
}
BENCHMARK(BM_JackknifeShared);

void BM_JackknifeNaive(benchmark::State& state) {
  const auto experiment = make_experiment(100, 50);
  npjive::DebiasConfig cfg;
  cfg.dictionary_size = 50;
  const auto ws = npjive::make_qa_workspace(experiment.historical, nullptr, cfg);
  for (auto _ : state)
    benchmark::DoNotOptimize(npjive::jackknife_diagonal_naive(ws, experiment.historical));
}
BENCHMARK(BM_JackknifeNaive);

}  // namespace

BENCHMARK_MAIN();
