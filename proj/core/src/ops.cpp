#include "ecgbnn/ops.hpp"

#include <algorithm>
#include <string>

namespace ecgbnn {

std::size_t conv_output_length(std::size_t length, std::size_t taps, std::size_t stride,
                               std::size_t padding) {
  if (taps == 0 || stride == 0) throw InvalidValueError("conv: taps and stride must be >= 1");
  if (length + 2 * padding < taps) {
    throw EmptyOutputError("conv: padded length " + std::to_string(length + 2 * padding) +
                           " is shorter than the kernel (" + std::to_string(taps) + ")");
  }
  return (length + 2 * padding - taps) / stride + 1;
}

std::size_t pool_output_length(std::size_t length, std::size_t size, std::size_t stride) {
  if (size == 0 || stride == 0) throw InvalidValueError("maxpool: size and stride must be >= 1");
  if (length < size) {
    throw EmptyOutputError("maxpool: length " + std::to_string(length) +
                           " is shorter than the window (" + std::to_string(size) + ")");
  }
  return (length - size) / stride + 1;
}

namespace {

// Copies `src` into a longer zeroed vector with `padding` pad bits on each side.
PackedBitVector pad_row(const PackedBitVector& src, std::size_t padding, bool pad_bit) {
  PackedBitVector out(src.size() + 2 * padding);
  std::vector<std::uint64_t> words(out.words().begin(), out.words().end());
  std::span<std::uint64_t> dst(words);
  const std::uint64_t fill = pad_bit ? ~std::uint64_t{0} : 0;
  for (std::size_t i = 0; i < padding; i += kWordBits) {
    const std::size_t n = std::min(kWordBits, padding - i);
    deposit_bits(dst, i, fill, n);
    deposit_bits(dst, padding + src.size() + i, fill, n);
  }
  for (std::size_t i = 0; i < src.size(); i += kWordBits) {
    const std::size_t n = std::min(kWordBits, src.size() - i);
    deposit_bits(dst, padding + i, extract_bits(src.words(), i, n), n);
  }
  return PackedBitVector::from_words(std::move(words), out.size());
}

}  // namespace

IntFeatureMap binary_conv1d(const BinaryTensor& input, const BinaryTensor& weights,
                            const ConvSpec& spec) {
  if (weights.in_channels() != input.channels() || weights.taps() != spec.taps) {
    throw DimensionError("binary_conv1d: weights (" + std::to_string(weights.rows()) + "," +
                         std::to_string(weights.in_channels()) + "," +
                         std::to_string(weights.taps()) + ") do not match input channels " +
                         std::to_string(input.channels()) + " / taps " +
                         std::to_string(spec.taps));
  }
  if (spec.pad_value != 1.0F && spec.pad_value != -1.0F) {
    throw InvalidValueError("binary_conv1d: pad value must be +1 or -1");
  }
  const std::size_t cin = input.channels();
  const std::size_t taps = spec.taps;
  const std::size_t out_len = conv_output_length(input.length(), taps, spec.stride, spec.padding);
  const std::size_t n_bits = cin * taps;

  std::vector<PackedBitVector> padded;
  padded.reserve(cin);
  for (std::size_t c = 0; c < cin; ++c) {
    padded.push_back(pad_row(input.row(c), spec.padding, spec.pad_value > 0));
  }

  IntFeatureMap out(weights.rows(), out_len);
  std::vector<std::uint64_t> window(words_for_bits(n_bits));
  for (std::size_t t = 0; t < out_len; ++t) {
    std::fill(window.begin(), window.end(), 0);
    const std::size_t start = t * spec.stride;
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t j = 0; j < taps; j += kWordBits) {
        const std::size_t n = std::min(kWordBits, taps - j);
        deposit_bits(window, c * taps + j, extract_bits(padded[c].words(), start + j, n), n);
      }
    }
    for (std::size_t o = 0; o < weights.rows(); ++o) {
      out.at(o, t) = xnor_popcount_dot(weights.row(o).words(), window, n_bits);
    }
  }
  return out;
}

RealFeatureMap real_input_conv1d(const RealFeatureMap& input, const BinaryTensor& weights,
                                 const ConvSpec& spec) {
  if (input.channels != 1) {
    throw DimensionError("real_input_conv1d: expected 1 input channel, got " +
                         std::to_string(input.channels));
  }
  return signed_conv1d(input, weights, spec);
}

}  // namespace ecgbnn
