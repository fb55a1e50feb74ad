// Serial reference vs OpenMP kernels on blob-shaped masks.
#include <benchmark/benchmark.h>
#include <omp.h>

#include <cstdint>
#include <random>

#include "exmorph/distance.hpp"
#include "exmorph/metrics.hpp"
#include "exmorph/volume.hpp"

using namespace exmorph;

namespace {

Mask blob(std::int64_t side, std::uint64_t seed, double shift = 0.0) {
  Mask m(VoxelGrid({side, side, side}, {0.3, 0.3, 0.45}));
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution noise(0.02);
  const double c = side / 2.0 + shift, r2 = (side / 2.5) * (side / 2.5);
  for (std::int64_t z = 0; z < side; ++z)
    for (std::int64_t y = 0; y < side; ++y)
      for (std::int64_t x = 0; x < side; ++x) {
        const double d = (x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c);
        m(x, y, z) = (d < r2) != noise(rng);
      }
  return m;
}

void BM_edt_serial(benchmark::State& state) {
  const Mask m = blob(state.range(0), 1);
  for (auto _ : state) benchmark::DoNotOptimize(distance_transform_serial(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.data.size()));
}

void BM_edt_parallel(benchmark::State& state) {
  const Mask m = blob(state.range(0), 1);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(distance_transform(m));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.data.size()));
}

void BM_hd95(benchmark::State& state) {
  const Mask a = blob(state.range(0), 1), b = blob(state.range(0), 2, 1.5);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(hd95(a, b));
}

}  // namespace

BENCHMARK(BM_edt_serial)->Arg(64)->Arg(128)->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_edt_parallel)->ArgsProduct({{64, 128}, {1, 2, 4}})->UseRealTime()->Unit(benchmark::kMillisecond);
BENCHMARK(BM_hd95)->ArgsProduct({{64, 128}, {1, 4}})->UseRealTime()->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
