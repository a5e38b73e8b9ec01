// Reference versus optimized convolution and the smoothing filter.
//   bench_kernels --benchmark_filter=Conv

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "skydepth/datagen.hpp"
#include "skydepth/kernels/conv2d.hpp"

using namespace skydepth;

namespace {

kernels::ConvGeometry geometry(const benchmark::State& state) {
  kernels::ConvGeometry g;
  g.in_channels = state.range(0);
  g.out_channels = state.range(0);
  g.height = g.width = state.range(1);
  g.kernel_h = g.kernel_w = 3;
  g.padding = 1;
  g.pad_mode = kernels::PadMode::reflect;
  return g;
}

std::vector<float> random_vector(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  std::vector<float> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

struct ConvBuffers {
  std::vector<float> x, w, b, y;
  explicit ConvBuffers(const kernels::ConvGeometry& g)
      : x(random_vector(g.batch * g.in_channels * g.height * g.width, 1)),
        w(random_vector(g.out_channels * g.patch_size(), 2)),
        b(random_vector(g.out_channels, 3)),
        y(g.batch * g.out_channels * g.out_pixels()) {}
};

void set_counters(benchmark::State& state, const kernels::ConvGeometry& g) {
  const double flops = 2.0 * g.out_channels * g.out_pixels() * g.patch_size();
  state.counters["FLOP/s"] =
      benchmark::Counter(flops, benchmark::Counter::kIsIterationInvariantRate);
}

void BM_ConvForwardReference(benchmark::State& state) {
  const auto g = geometry(state);
  ConvBuffers buf(g);
  for (auto _ : state) {
    kernels::reference::conv2d_forward<float>(g, buf.x, buf.w, buf.b, buf.y);
    benchmark::DoNotOptimize(buf.y.data());
  }
  set_counters(state, g);
}

void BM_ConvForwardOptimized(benchmark::State& state) {
  const auto g = geometry(state);
  ConvBuffers buf(g);
  kernels::ConvWorkspace<float> ws;
  for (auto _ : state) {
    kernels::conv2d_forward<float>(g, buf.x, buf.w, buf.b, buf.y, &ws);
    benchmark::DoNotOptimize(buf.y.data());
  }
  set_counters(state, g);
}

void BM_ConvBackwardReference(benchmark::State& state) {
  const auto g = geometry(state);
  ConvBuffers buf(g);
  std::vector<float> gx(buf.x.size()), gw(buf.w.size()), gb(buf.b.size());
  for (auto _ : state) {
    kernels::reference::conv2d_backward<float>(g, buf.x, buf.w, buf.y, gx, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
  set_counters(state, g);
}

void BM_ConvBackwardOptimized(benchmark::State& state) {
  const auto g = geometry(state);
  ConvBuffers buf(g);
  kernels::ConvWorkspace<float> ws;
  kernels::conv2d_forward<float>(g, buf.x, buf.w, buf.b, buf.y, &ws);
  std::vector<float> gx(buf.x.size()), gw(buf.w.size()), gb(buf.b.size());
  for (auto _ : state) {
    kernels::conv2d_backward<float>(g, buf.x, buf.w, buf.y, &ws, gx, gw, gb);
    benchmark::DoNotOptimize(gw.data());
  }
  set_counters(state, g);
}

void BM_GaussianSmooth(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  DepthMask m(n, n);
  const auto v = random_vector(static_cast<std::size_t>(n) * n, 4);
  std::copy(v.begin(), v.end(), m.data().begin());
  for (auto _ : state) benchmark::DoNotOptimize(datagen::gaussian_smooth(m, 2.0, 9));
}

}  // namespace

BENCHMARK(BM_ConvForwardReference)->Args({16, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardOptimized)->Args({16, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardReference)->Args({16, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardOptimized)->Args({16, 64})->Args({32, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GaussianSmooth)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
