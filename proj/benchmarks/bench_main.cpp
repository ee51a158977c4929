#include <benchmark/benchmark.h>

#include <random>

#include "fluxcube/clustering.hpp"
#include "fluxcube/forecasting.hpp"
#include "fluxcube/synth.hpp"
#include "fluxcube/training.hpp"

using namespace fluxcube;

namespace {

ActivityTensor normalized(const ActivityTensor& raw) {
  return ActivityTensor(raw.time_labels(), raw.location_labels(), raw.keyword_labels(),
                        std::vector<double>(raw.values().begin(), raw.values().end()), true);
}

// One teacher-forced loss and gradient pass over the two-group-flow window.
void BM_LossAndGradient(benchmark::State& state) {
  const ActivityTensor w = normalized(generate(scenario("two-group-flow", 0, 364)));
  TrainConfig config;
  const GroupAssignment groups = scenario("two-group-flow").groups;
  const auto hidden = static_cast<std::size_t>(state.range(0));
  const Dynamics dyn = initialize_dynamics(w.locations(), w.keywords(), groups, hidden, w.steps(), config, 1);
  const LossFunction f(w, dyn, 0.1, 0.1, 327);
  std::vector<Eigen::MatrixXd> grads;
  for (auto _ : state) benchmark::DoNotOptimize(f.evaluate(dyn, grads).total);
}
BENCHMARK(BM_LossAndGradient)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Forecast(benchmark::State& state) {
  const SynthSpec spec = scenario("two-group-flow", 0, 364);
  const ActivityTensor w = normalized(generate(spec));
  TrainConfig config;
  FluxCubeModel m;
  m.dynamics = initialize_dynamics(w.locations(), w.keywords(), spec.groups, 32, w.steps(), config, 1);
  m.time_labels = w.time_labels();
  m.location_labels = w.location_labels();
  m.keyword_labels = w.keyword_labels();
  m.norm = NormStats::identity(w.locations(), w.keywords());
  m.last_observation = w.slice(w.steps() - 1);
  const auto steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(forecast(m, w, steps).length);
}
BENCHMARK(BM_Forecast)->Arg(13)->Arg(52)->Unit(benchmark::kMillisecond);

void BM_KMeans(benchmark::State& state) {
  const auto n = static_cast<Eigen::Index>(state.range(0));
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  Eigen::MatrixXd pts(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    pts(i, 0) = g(rng) + static_cast<double>(i % 4) * 3.0;
    pts(i, 1) = g(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, 4, 7).inertia);
}
BENCHMARK(BM_KMeans)->Arg(50)->Arg(500)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
