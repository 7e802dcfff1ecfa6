#include <benchmark/benchmark.h>

#include "jumpcons/likelihood.hpp"
#include "jumpcons/priors.hpp"
#include "jumpcons/simulator.hpp"

using namespace jumpcons;

namespace {

JumpDiffusionModel bench_model(int d) {
  const DomainSpec domain(d, 3.0);
  const GaussianPriorConfig prior{domain, d + 3.0, 4, 1.0};
  return JumpDiffusionModel(sample_drift_prior(prior, 7), sample_levy_prior(DPMixConfig{}, domain, 7));
}

void BM_DriftEval(benchmark::State& state) {
  const auto model = bench_model(static_cast<int>(state.range(0)));
  Vector x = Vector::Constant(model.dim(), 0.4);
  Vector out(model.dim());
  for (auto _ : state) {
    model.drift().eval(x, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DriftEval)->Arg(1)->Arg(2)->Arg(3);

void BM_SimulateEndpoint(benchmark::State& state) {
  const Dynamics dyn(bench_model(1));
  const Vector x0 = Vector::Zero(1);
  std::uint64_t stream = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_endpoint(dyn, x0, 0.5, 0.01, 11, stream++));
  }
}
BENCHMARK(BM_SimulateEndpoint);

void BM_SimulatePath(benchmark::State& state) {
  const auto model = bench_model(1);
  const Vector x0 = Vector::Zero(1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_path(model, x0, 1.0, 1e-3, seed++));
  }
}
BENCHMARK(BM_SimulatePath)->Unit(benchmark::kMillisecond);

void BM_TransitionDensity(benchmark::State& state) {
  const auto model = bench_model(1);
  const Vector x = Vector::Zero(1);
  const Vector y = Vector::Constant(1, 0.3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        estimate_transition_density(model, x, y, 0.5, static_cast<std::size_t>(state.range(0)), std::nullopt, 0.05, 3));
  }
}
BENCHMARK(BM_TransitionDensity)->Arg(128)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_PosteriorScore(benchmark::State& state) {
  const auto model = bench_model(1);
  const auto data = sample_observations(model, static_cast<std::size_t>(state.range(0)), 0.5, 0.01, 5);
  const PriorConfigs priors{GaussianPriorConfig{model.domain(), 4.0, 4, 1.0}, DPMixConfig{}};
  EstimatorConfig estimator;
  estimator.replicates = 128;
  estimator.dt = 0.05;
  for (auto _ : state) {
    benchmark::DoNotOptimize(log_posterior_unnorm(model, data, priors, estimator, 9));
  }
}
BENCHMARK(BM_PosteriorScore)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
