// Serial reference vs OpenMP kernels: analytical sweeps and the exhaustive
// plan search.

#include <benchmark/benchmark.h>

#include <vector>

#include "fixtures.hpp"
#include "tailfit/optimizer.hpp"
#include "tailfit/profile.hpp"

namespace {

using namespace tailfit;

const LayerSpec kLayer{"conv", 4096, 3, 3, 512, 14, 14, 64, FilterStyle::Dense};

void BM_ProfileSerial(benchmark::State& state) {
  const auto widths = width_range(1, state.range(0));
  const GpuSpec gpu = testing::titan_v();
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_analytical_profile_serial(kLayer, gpu, widths));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_ProfileParallel(benchmark::State& state) {
  const auto widths = width_range(1, state.range(0));
  const GpuSpec gpu = testing::titan_v();
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate_analytical_profile(kLayer, gpu, widths));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(BM_ProfileSerial)->Arg(512)->Arg(4096);
BENCHMARK(BM_ProfileParallel)->Arg(512)->Arg(4096);

struct OracleInput {
  ModelConfig model;
  std::vector<ProfileTable> tables;
  OracleOptions options;
};

// Last `layers` VGG layers (the wide ones), all candidates: up to 7 options
// per layer, so 7 layers is roughly half a million assignments.
OracleInput oracle_input(int layers) {
  OracleInput in;
  in.model = testing::vgg16_cifar_pruned();
  auto& all = in.model.layers;
  all.erase(all.begin(), all.end() - layers);
  in.tables = generate_full_profiles(testing::specs_of(in.model), testing::titan_v());
  in.options.m = 6;
  in.options.tau = 1e9;
  return in;
}

void BM_OracleSerial(benchmark::State& state) {
  const OracleInput in = oracle_input(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(brute_force_plan_serial(in.model, in.tables, in.options));
  }
}

void BM_OracleParallel(benchmark::State& state) {
  const OracleInput in = oracle_input(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(brute_force_plan(in.model, in.tables, in.options));
  }
}

BENCHMARK(BM_OracleSerial)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OracleParallel)->Arg(5)->Arg(7)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
