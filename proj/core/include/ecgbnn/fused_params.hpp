#pragma once

#include <cstdint>
#include <variant>

namespace ecgbnn {

// How one half of the input domain (x >= 0 or x < 0) maps to a +1/-1 bit.
enum class Comparison : std::uint8_t {
  kGreaterEqual = 0,    // +1 iff x >= threshold
  kLessEqual = 1,       // +1 iff x <= threshold
  kAlwaysPositive = 2,  // threshold unused
  kAlwaysNegative = 3,  // threshold unused
};

template <typename T>
struct BranchRule {
  Comparison cmp = Comparison::kAlwaysNegative;
  T threshold{};

  int decide(T x) const noexcept {
    switch (cmp) {
      case Comparison::kGreaterEqual: return x >= threshold ? 1 : -1;
      case Comparison::kLessEqual: return x <= threshold ? 1 : -1;
      case Comparison::kAlwaysPositive: return 1;
      case Comparison::kAlwaysNegative: return -1;
    }
    return -1;
  }

  bool is_constant() const noexcept {
    return cmp == Comparison::kAlwaysPositive || cmp == Comparison::kAlwaysNegative;
  }

  friend bool operator==(const BranchRule&, const BranchRule&) = default;
};

// Fused PReLU -> BatchNorm -> Sign for one channel. The positive rule covers
// x >= 0 and the negative rule x < 0, mirroring the two PReLU pieces.
template <typename T>
struct ThresholdChannel {
  BranchRule<T> pos;
  BranchRule<T> neg;

  int decide(T x) const noexcept { return x >= T{0} ? pos.decide(x) : neg.decide(x); }

  friend bool operator==(const ThresholdChannel&, const ThresholdChannel&) = default;
};

// Popcount-domain channels (integer conv outputs).
using IntThresholdChannel = ThresholdChannel<std::int32_t>;
// Real-input first block in BP mode.
using RealThresholdChannel = ThresholdChannel<float>;

// Fused PReLU -> BatchNorm without a following Sign (last block):
// y = k*x + b for x >= 0, a*k*x + b otherwise.
struct AffineChannel {
  float k = 1.0F;
  float b = 0.0F;
  float a = 1.0F;

  friend bool operator==(const AffineChannel&, const AffineChannel&) = default;
};

using FusedChannelParams = std::variant<IntThresholdChannel, RealThresholdChannel, AffineChannel>;

// Admissible inputs of a fused channel.
struct IntegerDomain {
  std::int32_t bound = 0;  // x in [-bound, bound]
};
struct RealDomain {};
using ActivationDomain = std::variant<IntegerDomain, RealDomain>;

}  // namespace ecgbnn
