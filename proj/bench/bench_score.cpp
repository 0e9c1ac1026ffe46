#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "specrank/score_kernels.hpp"

using namespace specrank;

namespace {

struct Inputs {
  std::size_t rows, cols, dim;
  std::vector<float> texts, images, out;
  Inputs(std::size_t r, std::size_t c, std::size_t d) : rows(r), cols(c), dim(d), out(r * c) {
    std::mt19937_64 gen(1);
    std::normal_distribution<float> nd;
    texts.resize(r * d);
    images.resize(c * d);
    for (auto& v : texts) v = nd(gen);
    for (auto& v : images) v = nd(gen);
  }
};

void BM_Serial(benchmark::State& state) {
  Inputs in(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 512);
  const ScorerConfig cfg;
  for (auto _ : state) {
    kernels::score_block_serial(in.texts, in.rows, in.images, in.cols, in.dim, cfg, in.out);
    benchmark::DoNotOptimize(in.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.rows * in.cols));
}

void BM_Parallel(benchmark::State& state) {
  Inputs in(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(1)), 512);
  const ScorerConfig cfg;
  const int threads = static_cast<int>(state.range(2));
  for (auto _ : state) {
    kernels::score_block_parallel(in.texts, in.rows, in.images, in.cols, in.dim, cfg, in.out, threads);
    benchmark::DoNotOptimize(in.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(in.rows * in.cols));
}

}  // namespace

BENCHMARK(BM_Serial)->Args({256, 1000})->Args({256, 5000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Parallel)
    ->Args({256, 1000, 1})
    ->Args({256, 5000, 1})
    ->Args({256, 5000, 4})
    ->Args({256, 5000, 8})
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
