#include <benchmark/benchmark.h>

#include <vector>

#include "snitchdt/ann.hpp"
#include "snitchdt/metrics.hpp"
#include "snitchdt/plant.hpp"
#include "snitchdt/rng.hpp"
#include "snitchdt/twin.hpp"

namespace {

using namespace snitchdt;

void bm_plant_step(benchmark::State& state) {
  PlantParams p;
  PlantState s = equilibrium_state(0.2, p);
  Rng rng(1);
  NodeTelemetry prev{};
  prev.v_g_meas = s.v_g;
  prev.q_g_meas = s.q_g;
  for (auto _ : state) {
    ControllerInputs in{0.25, prev.v_g_meas, prev.q_g_meas};
    prev = plant_step(s, in, p, rng);
    benchmark::DoNotOptimize(prev);
  }
}
BENCHMARK(bm_plant_step);

void bm_twin_step(benchmark::State& state) {
  PlantParams p;
  const PlantState s = equilibrium_state(0.2, p);
  DigitalTwin twin(p, s, MonitoredChannel::reactive_power);
  for (auto _ : state) benchmark::DoNotOptimize(twin.step(0.25));
}
BENCHMARK(bm_twin_step);

void bm_trust_update(benchmark::State& state) {
  ResidualWindow w(500);
  Rng rng(2);
  for (auto _ : state) {
    w.push(1e-3 * rng.gaussian());
    benchmark::DoNotOptimize(trust_score(w, 1e-6, 500));
  }
}
BENCHMARK(bm_trust_update);

void bm_ann_forward(benchmark::State& state) {
  Rng rng(3);
  const MlpParams p = xavier_init(40, 16, rng);
  std::vector<double> x(40);
  for (auto& v : x) v = rng.gaussian();
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, x));
}
BENCHMARK(bm_ann_forward);

void bm_roc_curve(benchmark::State& state) {
  Rng rng(4);
  const std::size_t n = 40000;
  std::vector<double> score(n);
  std::vector<bool> truth(n);
  for (std::size_t i = 0; i < n; ++i) {
    truth[i] = rng.uniform() < 0.2;
    score[i] = rng.gaussian() + (truth[i] ? 1.0 : 0.0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(roc_curve(score, truth, 200));
}
BENCHMARK(bm_roc_curve);

}  // namespace

BENCHMARK_MAIN();
