// Parallel kernels against the serial reference versions on decoder/encoder-sized shapes.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "lacnet/kernels.hpp"
#include "lacnet/model.hpp"
#include "lacnet/reference_kernels.hpp"
#include "lacnet/rng.hpp"
#include "lacnet/training.hpp"

using namespace lacnet;

static Tensor<float> random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
  Tensor<float> t(n, c, h, w);
  Rng rng(seed);
  for (auto& v : t.data) v = static_cast<float>(rng.uniform(-1, 1));
  return t;
}

static void BM_ConvParallel(benchmark::State& st) {
  const int c = static_cast<int>(st.range(0)), hw = static_cast<int>(st.range(1));
  auto x = random_tensor(16, c, hw, hw, 1), w = random_tensor(c, c, 3, 3, 2);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::conv2d_forward(x, w, Tensor<float>{}, {1, 1}));
  st.SetItemsProcessed(st.iterations() * 16LL * c * c * 9 * hw * hw);
}
static void BM_ConvReference(benchmark::State& st) {
  const int c = static_cast<int>(st.range(0)), hw = static_cast<int>(st.range(1));
  auto x = random_tensor(16, c, hw, hw, 1), w = random_tensor(c, c, 3, 3, 2);
  for (auto _ : st) benchmark::DoNotOptimize(reference::conv2d_forward(x, w, Tensor<float>{}, {1, 1}));
  st.SetItemsProcessed(st.iterations() * 16LL * c * c * 9 * hw * hw);
}
BENCHMARK(BM_ConvParallel)->Args({16, 16})->Args({32, 8})->Args({64, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvReference)->Args({16, 16})->Args({32, 8})->Args({64, 4})->Unit(benchmark::kMillisecond);

static void BM_GroupNormParallel(benchmark::State& st) {
  auto x = random_tensor(16, 32, 16, 16, 3), g = random_tensor(1, 32, 1, 1, 4), b = random_tensor(1, 32, 1, 1, 5);
  kernels::GroupNormStats<float> stats;
  for (auto _ : st) benchmark::DoNotOptimize(kernels::group_norm_forward(x, g, b, 4, &stats));
}
static void BM_GroupNormReference(benchmark::State& st) {
  auto x = random_tensor(16, 32, 16, 16, 3), g = random_tensor(1, 32, 1, 1, 4), b = random_tensor(1, 32, 1, 1, 5);
  for (auto _ : st) benchmark::DoNotOptimize(reference::group_norm_forward(x, g, b, 4));
}
BENCHMARK(BM_GroupNormParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GroupNormReference)->Unit(benchmark::kMicrosecond);

static void BM_ResizeParallel(benchmark::State& st) {
  auto x = random_tensor(16, 16, 16, 16, 6);
  for (auto _ : st) benchmark::DoNotOptimize(kernels::resize_bilinear_forward(x, 64, 64));
}
static void BM_ResizeReference(benchmark::State& st) {
  auto x = random_tensor(16, 16, 16, 16, 6);
  for (auto _ : st) benchmark::DoNotOptimize(reference::resize_bilinear_forward(x, 64, 64));
}
BENCHMARK(BM_ResizeParallel)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ResizeReference)->Unit(benchmark::kMicrosecond);

static void BM_TrainIteration(benchmark::State& st) {
  GeneratorConfig gc;
  const auto scenes = generate_scenes(gc, 0, 8);
  const auto index = instance_index(scenes);
  TrainConfig tc;
  TrainState state{ModelConfig{}};
  for (auto _ : st) benchmark::DoNotOptimize(train_iteration(state, scenes, index, tc));
}
BENCHMARK(BM_TrainIteration)->Unit(benchmark::kMillisecond)->Iterations(5);

BENCHMARK_MAIN();
