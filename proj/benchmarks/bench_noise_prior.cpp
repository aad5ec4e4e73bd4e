#include "vfxopt/flow.hpp"
#include "vfxopt/noise_prior.hpp"
#include "vfxopt/simulation.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace vfxopt;

TensorShape cube(benchmark::State &state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  return {4, 16, n, n};
}

void BM_ProjectSpatial(benchmark::State &state) {
  const auto x = gaussian_noise(cube(state), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_spatial(x, 0.1));
  }
}
BENCHMARK(BM_ProjectSpatial)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ProjectTemporal(benchmark::State &state) {
  const auto x = gaussian_noise(cube(state), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_temporal(x, 0.9));
  }
}
BENCHMARK(BM_ProjectTemporal)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_EnhanceNoise(benchmark::State &state) {
  const auto x = gaussian_noise(cube(state), 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enhance_noise(x, {}));
  }
}
BENCHMARK(BM_EnhanceNoise)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Blend(benchmark::State &state) {
  const auto a = gaussian_noise(cube(state), 1);
  const auto b = gaussian_noise(cube(state), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(blend(a, b, BlendWeight(0.001)));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(a.size()));
}
BENCHMARK(BM_Blend)->Arg(32)->Arg(64);

void BM_Inversion(benchmark::State &state) {
  const auto field = make_simulation_field();
  const auto x = gaussian_noise({4, 16, 16, 16}, 3);
  const Condition cond{"a lantern, intensity=0.8", std::nullopt};
  IntegratorConfig cfg;
  cfg.steps = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(invert(*field, x, cond, cfg));
  }
}
BENCHMARK(BM_Inversion)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

} // namespace
