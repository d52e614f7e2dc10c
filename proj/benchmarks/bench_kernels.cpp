#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "ecgbnn/bintensor.hpp"
#include "ecgbnn/data.hpp"
#include "ecgbnn/model.hpp"
#include "ecgbnn/ops.hpp"
#include "ecgbnn/train.hpp"

using namespace ecgbnn;

namespace {

BinaryTensor random_activations(std::size_t channels, std::size_t length, std::mt19937_64& rng) {
  BinaryTensor t = BinaryTensor::activations(channels, length);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < length; ++i) t.set(c, i, (rng() & 1U) != 0 ? 1 : -1);
  }
  return t;
}

BinaryTensor random_weights(std::size_t out, std::size_t in, std::size_t taps, std::mt19937_64& rng) {
  BinaryTensor t = BinaryTensor::weights(out, in, taps);
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t c = 0; c < in; ++c) {
      for (std::size_t k = 0; k < taps; ++k) t.set(o, c, k, (rng() & 1U) != 0 ? 1 : -1);
    }
  }
  return t;
}

FusedModel untrained_model(std::size_t classes, Mode mode) {
  const NetConfig cfg = build_default_config(classes, mode);
  std::mt19937_64 rng(1);
  TrainedParams p = initial_params(cfg, 1.0, rng);
  std::normal_distribution<float> noise(0.0F, 0.5F);
  for (BlockParams& b : p.blocks) {
    for (float& v : b.beta) v = noise(rng);
  }
  return fuse(p, cfg);
}

RealFeatureMap segment(std::size_t length) {
  const Dataset d = standardized(synth_dataset(LabelScheme::aami5(), 1, length, 0.1, 3));
  RealFeatureMap x(1, length);
  x.values = d.segments[0].samples;
  return x;
}

// Args: in channels, out channels, input length (Table-like block shapes).
void BM_BinaryConv1d(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const auto len = static_cast<std::size_t>(state.range(2));
  std::mt19937_64 rng(7);
  const BinaryTensor x = random_activations(cin, len, rng);
  const BinaryTensor w = random_weights(cout, cin, 7, rng);
  const ConvSpec spec{7, 1, 5, 1.0F};
  for (auto _ : state) benchmark::DoNotOptimize(binary_conv1d(x, w, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cin * cout * 7 * len));
}
BENCHMARK(BM_BinaryConv1d)->Args({8, 16, 898})->Args({16, 32, 448})->Args({32, 32, 223})
    ->Args({32, 64, 111});

void BM_FloatConv1d(benchmark::State& state) {
  const auto cin = static_cast<std::size_t>(state.range(0));
  const auto cout = static_cast<std::size_t>(state.range(1));
  const auto len = static_cast<std::size_t>(state.range(2));
  std::mt19937_64 rng(7);
  const BinaryTensor w = random_weights(cout, cin, 7, rng);
  FeatureMap<float> x(cin, len);
  for (std::size_t i = 0; i < x.values.size(); ++i) x.values[i] = (rng() & 1U) != 0 ? 1.0F : -1.0F;
  const ConvSpec spec{7, 1, 5, 1.0F};
  for (auto _ : state) benchmark::DoNotOptimize(signed_conv1d(x, w, spec));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cin * cout * 7 * len));
}
BENCHMARK(BM_FloatConv1d)->Args({8, 16, 898})->Args({16, 32, 448})->Args({32, 32, 223})
    ->Args({32, 64, 111});

void BM_ForwardFusedBp(benchmark::State& state) {
  const FusedModel m = untrained_model(5, Mode::kBP);
  const RealFeatureMap x = segment(3600);
  for (auto _ : state) benchmark::DoNotOptimize(forward_fused(m, x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ForwardFusedBp);

void BM_ForwardFusedLp(benchmark::State& state) {
  const FusedModel m = untrained_model(5, Mode::kLP);
  const RealFeatureMap x = segment(3600);
  const BinaryTensor bits = lp_quantize_input(x.values);
  for (auto _ : state) benchmark::DoNotOptimize(forward_fused(m, bits));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ForwardFusedLp);

void BM_ForwardFloatBaseline(benchmark::State& state) {
  const FusedModel m = untrained_model(5, Mode::kBP);
  const RealFeatureMap x = segment(3600);
  for (auto _ : state) benchmark::DoNotOptimize(forward_fused_float(m, x));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ForwardFloatBaseline);

void BM_XnorPopcountDot(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(9);
  PackedBitVector a(n);
  PackedBitVector b(n);
  for (std::size_t i = 0; i < n; ++i) {
    a.set_bit(i, (rng() & 1U) != 0);
    b.set_bit(i, (rng() & 1U) != 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(xnor_popcount_dot(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_XnorPopcountDot)->Arg(56)->Arg(448)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
