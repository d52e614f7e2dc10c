#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ecgbnn/fused_params.hpp"
#include "ecgbnn/ops.hpp"

namespace ecgbnn {

// Trained PReLU + BatchNorm parameters of one channel, before fusion.
struct UnfusedChannel {
  double gamma = 1.0;
  double beta = 0.0;
  double mean = 0.0;
  double var = 1.0;
  double eps = 1e-5;
  double slope = 0.25;  // PReLU a

  double affine(double x) const { return batchnorm_infer(prelu(x, slope), mean, var, gamma, beta, eps); }
  // The composition the fused threshold must reproduce bit for bit.
  int decide(double x) const { return sign(affine(x)); }
};

struct AffineFold {
  double k = 1.0;
  double b = 0.0;
};

// k = gamma / sqrt(var + eps), b = beta - mean * k.
AffineFold fold_affine(double gamma, double beta, double mean, double var, double eps);

// Turns sign(k*x + b) on x >= 0 and sign(a*k*x + b) on x < 0 into per-branch
// comparisons. Each branch gets its own direction because k and a*k may be
// negative. Integer thresholds are ceil/floor of the rational boundary;
// thresholds strictly outside a branch's half-domain collapse to constants.
// Returns IntThresholdChannel for IntegerDomain, RealThresholdChannel for
// RealDomain. Throws InvalidValueError on non-finite input.
FusedChannelParams derive_thresholds(double k, double b, double a, const ActivationDomain& domain);

// Fuses one channel. Threshold channels start from derive_thresholds and any
// branch the validator rejects (floating-point rounding at an exact boundary)
// is rebuilt from the unfused composition itself, so the result always agrees
// with `ch.decide` on the whole domain. Without a following Sign the result
// is an AffineChannel.
FusedChannelParams fuse_channel(const UnfusedChannel& ch, bool has_following_sign,
                                const ActivationDomain& domain);

// Per-channel PReLU/BatchNorm arrays of one block.
struct BlockNormParams {
  std::span<const float> gamma;
  std::span<const float> beta;
  std::span<const float> mean;
  std::span<const float> var;
  std::span<const float> slope;
  double eps = 1e-5;

  std::size_t channels() const noexcept { return gamma.size(); }
  UnfusedChannel channel(std::size_t c) const;
};

// Throws DimensionError if the arrays disagree in length.
std::vector<FusedChannelParams> fuse_block(const BlockNormParams& params, bool has_following_sign,
                                           const ActivationDomain& domain);

struct FusionReport {
  bool ok = true;
  std::size_t points_checked = 0;
  // Populated when !ok.
  double mismatch_at = 0.0;
  double fused_value = 0.0;
  double reference_value = 0.0;
  std::string detail;
};

// Integer domains are checked exhaustively. Real domains are checked on a
// dense grid, a log-spaced magnitude sweep and the ulp neighbourhood of each
// threshold. Affine channels are compared against the composition within a
// float-storage tolerance.
FusionReport verify_fusion(const FusedChannelParams& params, const UnfusedChannel& unfused,
                           const ActivationDomain& domain);

}  // namespace ecgbnn
