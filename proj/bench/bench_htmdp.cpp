#include <benchmark/benchmark.h>

#include "htmdp/harness.hpp"
#include "htmdp/polytope_ftrl.hpp"

using namespace htmdp;

namespace {

ExperimentConfig replica_config(int workers) {
  ExperimentConfig c;
  c.instance = "default";
  c.learner = LearnerKind::kOm;
  c.regime.kind = RegimeKind::kFlip;
  c.regime.flip_period = 100;
  c.episodes = 1024;
  c.replicas = 8;
  c.seed = 99;
  c.workers = workers;
  return c;
}

void BM_ReplicasSerial(benchmark::State& state) {
  const auto config = replica_config(1);
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(config));
}
BENCHMARK(BM_ReplicasSerial)->Unit(benchmark::kMillisecond);

// Worker count is the benchmark argument; on a single core this mostly
// measures the OpenMP overhead.
void BM_ReplicasParallel(benchmark::State& state) {
  const auto config = replica_config(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_experiment(config));
}
BENCHMARK(BM_ReplicasParallel)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

struct SolveFixture {
  MdpLayout layout{{1, 3, 3, 3}, 3};
  TransitionKernel kernel;
  LossVector loss;

  SolveFixture() : kernel(layout), loss(layout) {
    Rng rng(5);
    kernel = random_kernel(layout, rng);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (auto& v : loss.values()) v = u(rng);
  }
};

void BM_SolveNewton(benchmark::State& state) {
  const SolveFixture f;
  const PolytopeSpec spec(f.kernel);
  const auto reg = TsallisRegularizer::with_rate(1.5, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ftrl_solve(spec, f.loss, reg, {1e-8, 500, SolverMethod::kDualNewton}));
  }
}
BENCHMARK(BM_SolveNewton)->Unit(benchmark::kMicrosecond);

void BM_SolveFrankWolfe(benchmark::State& state) {
  const SolveFixture f;
  const PolytopeSpec spec(f.kernel);
  const auto reg = TsallisRegularizer::with_rate(1.5, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ftrl_solve(spec, f.loss, reg, {1e-5, 20000, SolverMethod::kFrankWolfe}));
  }
}
BENCHMARK(BM_SolveFrankWolfe)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
