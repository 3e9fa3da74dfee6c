#include <benchmark/benchmark.h>

#include "softrestrict/montecarlo.hpp"

using namespace softrestrict;

namespace {

const ScenarioSpec& case1_spec() {
  static const ScenarioSpec spec = ScenarioSpec::preset(1);
  return spec;
}

const Dataset& case1_data() {
  static const Dataset data = generate_data(case1_spec(), 7);
  return data;
}

const RestrictionSystem& case1_system() {
  static const RestrictionSystem system = case1_spec().build_system();
  return system;
}

void BM_SolveInner(benchmark::State& state) {
  const KktSolver solver(case1_data(), case1_system());
  const double c = 0.5 * solver.h_tilde();
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.solve(c));
  }
}
BENCHMARK(BM_SolveInner);

void BM_SolvePath(benchmark::State& state) {
  const KktSolver solver(case1_data(), case1_system());
  const auto grid = tolerance_grid(1.0, 50, solver.h_tilde());
  for (auto _ : state) {
    benchmark::DoNotOptimize(solver.solve_path(grid));
  }
}
BENCHMARK(BM_SolvePath);

void BM_Pipeline(benchmark::State& state) {
  PipelineConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_pipeline(case1_data(), case1_system(), config));
  }
}
BENCHMARK(BM_Pipeline);

void BM_BootstrapReplicate(benchmark::State& state) {
  PipelineConfig config;
  const FitResult fit = run_pipeline(case1_data(), case1_system(), config);
  Rng rng(11);
  Eigen::VectorXd w(case1_data().n());
  for (int i = 0; i < w.size(); ++i) w[i] = draw_multiplier(rng, MultiplierLaw::rademacher);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        bootstrap_replicate(case1_data(), case1_system(), fit.solution, w, config));
  }
}
BENCHMARK(BM_BootstrapReplicate);

} // namespace

BENCHMARK_MAIN();
