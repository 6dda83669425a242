#include <benchmark/benchmark.h>

#include "fgrf/autodiff.hpp"
#include "fgrf/encoding.hpp"
#include "fgrf/rendering.hpp"
#include "fgrf/rng.hpp"

using namespace fgrf;

namespace {

void BM_Compositing(benchmark::State& state) {
  const int64_t R = state.range(0), N = 64;
  Rng rng = make_stream(1);
  Tensor sigma = Tensor::zeros({R, N}), delta = Tensor::zeros({R, N});
  for (auto& v : sigma.data) v = uniform(rng, 0, 5);
  for (auto& v : delta.data) v = uniform(rng, 0.01, 0.2);
  Tensor colors = Tensor::zeros({R, N, 3});
  for (auto& v : colors.data) v = uniform(rng);
  for (auto _ : state) {
    auto cw = transmittance_weights(ad::constant(sigma), ad::constant(delta));
    auto color = composite_color(cw, ad::constant(colors), {0, 0, 0});
    benchmark::DoNotOptimize(color->value.data.data());
  }
  state.SetItemsProcessed(state.iterations() * R * N);
}

void BM_HashEncode(benchmark::State& state) {
  const int64_t P = state.range(0);
  Rng rng = make_stream(2);
  HashGridConfig cfg;
  HashGrid grid(cfg, "g", rng);
  Tensor x = Tensor::zeros({P, 3});
  for (auto& v : x.data) v = uniform(rng);
  for (auto _ : state) {
    auto out = grid.encode(x);
    benchmark::DoNotOptimize(out->value.data.data());
  }
  state.SetItemsProcessed(state.iterations() * P);
}

void BM_AdamStep(benchmark::State& state) {
  const int64_t n = state.range(0);
  Rng rng = make_stream(3);
  ad::Parameter p("w", Tensor::zeros({n}));
  for (auto& v : p.value.data) v = gaussian(rng);
  for (auto& v : p.grad.data) v = gaussian(rng);
  ad::Adam opt({&p}, {.lr = 1e-3});
  for (auto _ : state) {
    opt.step();
    benchmark::DoNotOptimize(p.value.data.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}

void BM_BackwardMLP(benchmark::State& state) {
  const int64_t P = state.range(0);
  Rng rng = make_stream(4);
  Tensor x = Tensor::zeros({P, 16}), w1 = Tensor::zeros({16, 64}), w2 = Tensor::zeros({64, 1});
  for (auto& v : x.data) v = gaussian(rng);
  for (auto& v : w1.data) v = gaussian(rng) * 0.1;
  for (auto& v : w2.data) v = gaussian(rng) * 0.1;
  for (auto _ : state) {
    ad::Var xin = ad::leaf(x, true);
    ad::Var h = ad::relu(ad::matmul(xin, ad::constant(w1)));
    ad::Var loss = ad::sum_all(ad::matmul(h, ad::constant(w2)));
    ad::backward(loss);
    benchmark::DoNotOptimize(xin->grad.data.data());
  }
  state.SetItemsProcessed(state.iterations() * P);
}

}  // namespace

BENCHMARK(BM_Compositing)->Arg(64)->Arg(1024);
BENCHMARK(BM_HashEncode)->Arg(256)->Arg(4096);
BENCHMARK(BM_AdamStep)->Arg(1 << 12)->Arg(1 << 16);
BENCHMARK(BM_BackwardMLP)->Arg(256)->Arg(2048);

BENCHMARK_MAIN();
