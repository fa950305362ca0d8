// OpenMP kernels against the serial reference implementations.

#include "pushnet/nn/kernels.hpp"

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

using namespace pushnet::nn;

namespace {

std::vector<float> random_buffer(size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto a = random_buffer(static_cast<size_t>(n) * n, 1), b = random_buffer(static_cast<size_t>(n) * n, 2);
  std::vector<float> c(static_cast<size_t>(n) * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::gemm<float>(false, true, n, n, n, 1.0f, a.data(), b.data(), 0.0f, c.data());
    else
      reference::gemm<float>(false, true, n, n, n, 1.0f, a.data(), b.data(), 0.0f, c.data());
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
  state.counters["threads"] = omp_get_max_threads();
}

// The first conv layer of the position stream at 64 px, batch 32.
ConvGeometry conv_geometry(int size) {
  ConvGeometry g;
  g.channels = 1;
  g.height = g.width = size;
  g.out_channels = 32;
  g.kernel = 3;
  g.stride = 1;
  g.pad = 1;
  return g;
}

template <bool Parallel>
void BM_ConvForward(benchmark::State& state) {
  const ConvGeometry g = conv_geometry(static_cast<int>(state.range(0)));
  const int batch = 32;
  const auto x = random_buffer(static_cast<size_t>(batch) * g.channels * g.height * g.width, 3);
  const auto w = random_buffer(static_cast<size_t>(g.out_channels) * g.patch(), 4);
  const auto b = random_buffer(static_cast<size_t>(g.out_channels), 5);
  std::vector<float> y(static_cast<size_t>(batch) * g.out_channels * g.out_height() * g.out_width());
  std::vector<float> cols(static_cast<size_t>(batch) * g.patch() * g.out_height() * g.out_width());
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::conv2d_forward<float>(x.data(), w.data(), b.data(), batch, g, y.data(), cols.data());
    else
      reference::conv2d_forward<float>(x.data(), w.data(), b.data(), batch, g, y.data());
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_ConvBackward(benchmark::State& state) {
  const ConvGeometry g = conv_geometry(static_cast<int>(state.range(0)));
  const int batch = 32;
  const size_t out = static_cast<size_t>(batch) * g.out_channels * g.out_height() * g.out_width();
  const auto x = random_buffer(static_cast<size_t>(batch) * g.channels * g.height * g.width, 3);
  const auto w = random_buffer(static_cast<size_t>(g.out_channels) * g.patch(), 4);
  const auto b = random_buffer(static_cast<size_t>(g.out_channels), 5);
  const auto dy = random_buffer(out, 6);
  std::vector<float> y(out), dx(x.size()), dw(w.size()), db(b.size());
  std::vector<float> cols(static_cast<size_t>(batch) * g.patch() * g.out_height() * g.out_width());
  kernels::conv2d_forward<float>(x.data(), w.data(), b.data(), batch, g, y.data(), cols.data());
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::conv2d_backward<float>(dy.data(), w.data(), cols.data(), batch, g, dx.data(), dw.data(), db.data());
    else
      reference::conv2d_backward<float>(x.data(), dy.data(), w.data(), batch, g, dx.data(), dw.data(), db.data());
    benchmark::DoNotOptimize(dw.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<true>)->Name("gemm/kernels")->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<false>)->Name("gemm/reference")->Arg(64)->Arg(256);
BENCHMARK(BM_ConvForward<true>)->Name("conv2d_forward/kernels")->Arg(32)->Arg(64);
BENCHMARK(BM_ConvForward<false>)->Name("conv2d_forward/reference")->Arg(32)->Arg(64);
BENCHMARK(BM_ConvBackward<true>)->Name("conv2d_backward/kernels")->Arg(32)->Arg(64);
BENCHMARK(BM_ConvBackward<false>)->Name("conv2d_backward/reference")->Arg(32)->Arg(64);

BENCHMARK_MAIN();
