#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ecgbnn {

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_bits(std::size_t n_bits) {
  return (n_bits + kWordBits - 1) / kWordBits;
}

// A sequence of +1/-1 values, one bit each: +1 -> 1, -1 -> 0. Logical bit i
// lives in word i / 64 at bit position i % 64. Bits past size() in the last
// word are always zero.
class PackedBitVector {
 public:
  PackedBitVector() = default;

  // n_bits values, all -1.
  explicit PackedBitVector(std::size_t n_bits);

  // Adopts raw words. Throws InvalidValueError if the word count is wrong or
  // any bit past n_bits is set.
  static PackedBitVector from_words(std::vector<std::uint64_t> words, std::size_t n_bits);

  std::size_t size() const noexcept { return n_bits_; }
  bool empty() const noexcept { return n_bits_ == 0; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool bit(std::size_t i) const { return (words_[i / kWordBits] >> (i % kWordBits)) & 1U; }
  int value(std::size_t i) const { return bit(i) ? 1 : -1; }
  void set_bit(std::size_t i, bool on);

  std::size_t popcount() const noexcept;

  friend bool operator==(const PackedBitVector&, const PackedBitVector&) = default;

 private:
  std::vector<std::uint64_t> words_;
  std::size_t n_bits_ = 0;
};

// Packs +1/-1 values. Anything else (including 0) is an InvalidValueError.
PackedBitVector pack(std::span<const std::int8_t> values);
std::vector<std::int8_t> unpack(const PackedBitVector& v);

// +1/-1 dot product of two equal-length vectors via XNOR + POPCOUNT.
int xnor_popcount_dot(const PackedBitVector& a, const PackedBitVector& b);

// Same primitive over raw word ranges holding n_bits valid bits each.
// Bits past n_bits are ignored.
int xnor_popcount_dot(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                      std::size_t n_bits);

// Reads `count` (<= 64) bits starting at logical bit `pos`.
std::uint64_t extract_bits(std::span<const std::uint64_t> words, std::size_t pos,
                           std::size_t count);

// ORs the low `count` (<= 64) bits of `bits` into `words` starting at `pos`.
// The destination bits must be zero.
void deposit_bits(std::span<std::uint64_t> words, std::size_t pos, std::uint64_t bits,
                  std::size_t count);

// A stack of packed rows. Activations are (channels, length) with one row per
// channel. Weights are (out_channels, in_channels, taps) with one row per
// output channel, flattened in-channel-major: bit c * taps + k.
class BinaryTensor {
 public:
  BinaryTensor() = default;

  static BinaryTensor activations(std::size_t channels, std::size_t length);
  static BinaryTensor weights(std::size_t out_channels, std::size_t in_channels, std::size_t taps);

  std::size_t rows() const noexcept { return rows_.size(); }
  std::size_t in_channels() const noexcept { return in_channels_; }
  std::size_t taps() const noexcept { return taps_; }
  std::size_t row_bits() const noexcept { return in_channels_ * taps_; }

  // Activation view: channels x length.
  std::size_t channels() const noexcept { return rows_.size(); }
  std::size_t length() const noexcept { return taps_; }

  const PackedBitVector& row(std::size_t r) const { return rows_[r]; }
  PackedBitVector& row(std::size_t r) { return rows_[r]; }

  int at(std::size_t channel, std::size_t t) const { return rows_[channel].value(t); }
  int at(std::size_t out, std::size_t in, std::size_t k) const {
    return rows_[out].value(in * taps_ + k);
  }
  void set(std::size_t channel, std::size_t t, int v) { rows_[channel].set_bit(t, v > 0); }
  void set(std::size_t out, std::size_t in, std::size_t k, int v) {
    rows_[out].set_bit(in * taps_ + k, v > 0);
  }

  friend bool operator==(const BinaryTensor&, const BinaryTensor&) = default;

 private:
  std::vector<PackedBitVector> rows_;
  std::size_t in_channels_ = 1;
  std::size_t taps_ = 0;
};

}  // namespace ecgbnn
