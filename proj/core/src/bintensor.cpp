#include "ecgbnn/bintensor.hpp"

#include <bit>
#include <string>

#include "ecgbnn/errors.hpp"

namespace ecgbnn {

namespace {

std::uint64_t low_mask(std::size_t count) {
  return count >= kWordBits ? ~std::uint64_t{0} : (std::uint64_t{1} << count) - 1;
}

}  // namespace

PackedBitVector::PackedBitVector(std::size_t n_bits)
    : words_(words_for_bits(n_bits), 0), n_bits_(n_bits) {}

PackedBitVector PackedBitVector::from_words(std::vector<std::uint64_t> words, std::size_t n_bits) {
  if (words.size() != words_for_bits(n_bits)) {
    throw InvalidValueError("packed vector: expected " + std::to_string(words_for_bits(n_bits)) +
                            " words for " + std::to_string(n_bits) + " bits, got " +
                            std::to_string(words.size()));
  }
  const std::size_t tail = n_bits % kWordBits;
  if (tail != 0 && (words.back() & ~low_mask(tail)) != 0) {
    throw InvalidValueError("packed vector: bits set past the logical length");
  }
  PackedBitVector v;
  v.words_ = std::move(words);
  v.n_bits_ = n_bits;
  return v;
}

void PackedBitVector::set_bit(std::size_t i, bool on) {
  const std::uint64_t m = std::uint64_t{1} << (i % kWordBits);
  if (on) {
    words_[i / kWordBits] |= m;
  } else {
    words_[i / kWordBits] &= ~m;
  }
}

std::size_t PackedBitVector::popcount() const noexcept {
  std::size_t total = 0;
  for (auto w : words_) total += static_cast<std::size_t>(std::popcount(w));
  return total;
}

PackedBitVector pack(std::span<const std::int8_t> values) {
  PackedBitVector v(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == 1) {
      v.set_bit(i, true);
    } else if (values[i] != -1) {
      throw InvalidValueError("pack: element " + std::to_string(i) + " is " +
                              std::to_string(values[i]) + ", expected +1 or -1");
    }
  }
  return v;
}

std::vector<std::int8_t> unpack(const PackedBitVector& v) {
  std::vector<std::int8_t> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v.bit(i) ? 1 : -1;
  return out;
}

int xnor_popcount_dot(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b,
                      std::size_t n_bits) {
  const std::size_t n_words = words_for_bits(n_bits);
  int matches = 0;
  for (std::size_t w = 0; w + 1 < n_words; ++w) {
    matches += std::popcount(~(a[w] ^ b[w]));
  }
  if (n_words > 0) {
    const std::size_t tail = n_bits - (n_words - 1) * kWordBits;
    matches += std::popcount(~(a[n_words - 1] ^ b[n_words - 1]) & low_mask(tail));
  }
  return 2 * matches - static_cast<int>(n_bits);
}

int xnor_popcount_dot(const PackedBitVector& a, const PackedBitVector& b) {
  if (a.size() != b.size()) {
    throw DimensionError("xnor_popcount_dot: length " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  return xnor_popcount_dot(a.words(), b.words(), a.size());
}

std::uint64_t extract_bits(std::span<const std::uint64_t> words, std::size_t pos,
                           std::size_t count) {
  if (count == 0) return 0;
  const std::size_t w = pos / kWordBits;
  const std::size_t off = pos % kWordBits;
  std::uint64_t bits = words[w] >> off;
  if (off != 0 && off + count > kWordBits) {
    bits |= words[w + 1] << (kWordBits - off);
  }
  return bits & low_mask(count);
}

void deposit_bits(std::span<std::uint64_t> words, std::size_t pos, std::uint64_t bits,
                  std::size_t count) {
  if (count == 0) return;
  bits &= low_mask(count);
  const std::size_t w = pos / kWordBits;
  const std::size_t off = pos % kWordBits;
  words[w] |= bits << off;
  if (off != 0 && off + count > kWordBits) {
    words[w + 1] |= bits >> (kWordBits - off);
  }
}

BinaryTensor BinaryTensor::activations(std::size_t channels, std::size_t length) {
  BinaryTensor t;
  t.rows_.assign(channels, PackedBitVector(length));
  t.in_channels_ = 1;
  t.taps_ = length;
  return t;
}

BinaryTensor BinaryTensor::weights(std::size_t out_channels, std::size_t in_channels,
                                   std::size_t taps) {
  BinaryTensor t;
  t.rows_.assign(out_channels, PackedBitVector(in_channels * taps));
  t.in_channels_ = in_channels;
  t.taps_ = taps;
  return t;
}

}  // namespace ecgbnn
