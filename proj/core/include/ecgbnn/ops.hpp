#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "ecgbnn/bintensor.hpp"
#include "ecgbnn/errors.hpp"
#include "ecgbnn/fused_params.hpp"

namespace ecgbnn {

// Dense (channels, length) map, channel-major.
template <typename T>
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<T> values;

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t l, T fill = T{})
      : channels(c), length(l), values(c * l, fill) {}

  T& at(std::size_t c, std::size_t t) { return values[c * length + t]; }
  const T& at(std::size_t c, std::size_t t) const { return values[c * length + t]; }

  std::span<T> row(std::size_t c) { return {values.data() + c * length, length}; }
  std::span<const T> row(std::size_t c) const { return {values.data() + c * length, length}; }

  friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

// Popcount-domain accumulations.
using IntFeatureMap = FeatureMap<std::int32_t>;
// Real activations at deployment precision.
using RealFeatureMap = FeatureMap<float>;

struct ConvSpec {
  std::size_t taps = 7;
  std::size_t stride = 1;
  std::size_t padding = 0;
  float pad_value = 1.0F;  // +1/-1 on the binary path, any real on the real-input path

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

// floor((length + 2*padding - taps) / stride) + 1. Throws EmptyOutputError
// when the padded input is shorter than the kernel.
std::size_t conv_output_length(std::size_t length, std::size_t taps, std::size_t stride,
                               std::size_t padding);

// floor((length - size) / stride) + 1, no padding.
std::size_t pool_output_length(std::size_t length, std::size_t size, std::size_t stride);

// XNOR-POPCOUNT convolution. input (Cin, L), weights (Cout, Cin, K); output
// values are exact +1/-1 dot products of the padded window with each row.
IntFeatureMap binary_conv1d(const BinaryTensor& input, const BinaryTensor& weights,
                            const ConvSpec& spec);

// Single-channel real input against +1/-1 weights: every output is a signed
// sum of input samples accumulated in tap order, no multiplications.
RealFeatureMap real_input_conv1d(const RealFeatureMap& input, const BinaryTensor& weights,
                                 const ConvSpec& spec);

// Multi-channel real convolution with +1/-1 weights, accumulated in
// (in_channel, tap) order. Used by the real-arithmetic reference paths.
template <typename T>
FeatureMap<T> signed_conv1d(const FeatureMap<T>& input, const BinaryTensor& weights,
                            const ConvSpec& spec) {
  if (weights.in_channels() != input.channels || weights.taps() != spec.taps) {
    throw DimensionError("signed_conv1d: weights (" + std::to_string(weights.rows()) + "," +
                         std::to_string(weights.in_channels()) + "," +
                         std::to_string(weights.taps()) + ") do not match input channels " +
                         std::to_string(input.channels) + " / taps " +
                         std::to_string(spec.taps));
  }
  const std::size_t out_len =
      conv_output_length(input.length, spec.taps, spec.stride, spec.padding);
  const auto pad = static_cast<T>(spec.pad_value);
  FeatureMap<T> out(weights.rows(), out_len);
  for (std::size_t o = 0; o < weights.rows(); ++o) {
    for (std::size_t t = 0; t < out_len; ++t) {
      T acc{0};
      for (std::size_t c = 0; c < input.channels; ++c) {
        for (std::size_t k = 0; k < spec.taps; ++k) {
          const std::size_t p = t * spec.stride + k;  // position in the padded signal
          const T x = (p < spec.padding || p >= spec.padding + input.length)
                          ? pad
                          : input.at(c, p - spec.padding);
          acc = weights.at(o, c, k) > 0 ? acc + x : acc - x;
        }
      }
      out.at(o, t) = acc;
    }
  }
  return out;
}

template <typename T>
FeatureMap<T> maxpool1d(const FeatureMap<T>& x, std::size_t size, std::size_t stride) {
  const std::size_t out_len = pool_output_length(x.length, size, stride);
  FeatureMap<T> out(x.channels, out_len);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t t = 0; t < out_len; ++t) {
      T best = x.at(c, t * stride);
      for (std::size_t j = 1; j < size; ++j) {
        const T v = x.at(c, t * stride + j);
        if (v > best) best = v;
      }
      out.at(c, t) = best;
    }
  }
  return out;
}

inline double prelu(double x, double a) { return x >= 0.0 ? x : a * x; }

inline double batchnorm_infer(double x, double mu, double var, double gamma, double beta,
                              double eps) {
  return (x - mu) / std::sqrt(var + eps) * gamma + beta;
}

// +1 for x >= 0 (so sign(0) == +1), -1 otherwise.
template <typename T>
constexpr int sign(T x) noexcept {
  return x >= T{0} ? 1 : -1;
}

inline int fused_activation(std::int32_t x, const IntThresholdChannel& p) { return p.decide(x); }
inline int fused_activation(float x, const RealThresholdChannel& p) { return p.decide(x); }

inline double fused_affine(std::int64_t x, double k, double b, double a) {
  const auto xr = static_cast<double>(x);
  return x >= 0 ? k * xr + b : a * k * xr + b;
}

// Global sum pooling: per-channel sum over time, no division.
template <typename T>
auto gsp(const FeatureMap<T>& x) {
  using Acc = std::conditional_t<std::is_integral_v<T>, std::int64_t, double>;
  if (x.length == 0) throw EmptyOutputError("gsp: zero-length feature map");
  std::vector<Acc> out(x.channels, Acc{0});
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t t = 0; t < x.length; ++t) out[c] += static_cast<Acc>(x.at(c, t));
  }
  return out;
}

// Comparator head: index of the largest value, lowest index on ties.
template <typename T>
std::size_t argmax_head(std::span<const T> logits) {
  if (logits.empty()) throw DimensionError("argmax_head: empty logits");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return best;
}

template <typename T>
std::size_t argmax_head(const std::vector<T>& logits) {
  return argmax_head(std::span<const T>(logits));
}

}  // namespace ecgbnn
