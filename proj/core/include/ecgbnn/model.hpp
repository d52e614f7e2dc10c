#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "ecgbnn/bintensor.hpp"
#include "ecgbnn/fusion.hpp"
#include "ecgbnn/ops.hpp"

namespace ecgbnn {

// BP feeds the standardized signal to block 1; LP binarizes it first so
// block 1 is an XNOR layer too.
enum class Mode : std::uint8_t { kBP = 0, kLP = 1 };

std::string_view to_string(Mode mode);
// Accepts "bp" / "lp" (any case). Throws InvalidValueError otherwise.
Mode parse_mode(std::string_view text);

struct BlockConfig {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  ConvSpec conv;
  std::size_t pool_size = 7;
  std::size_t pool_stride = 2;

  friend bool operator==(const BlockConfig&, const BlockConfig&) = default;
};

struct BlockShape {
  std::size_t conv_length = 0;
  std::size_t pool_length = 0;

  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

struct NetConfig {
  std::vector<BlockConfig> blocks;
  std::size_t n_classes = 5;
  Mode mode = Mode::kBP;
  std::size_t input_length = 3600;

  // Padding value of the real-input first block (BP mode).
  float bp_pad_value() const { return blocks.empty() ? 1.0F : blocks.front().conv.pad_value; }

  // Channel chaining, class count, pad values and a non-empty final length.
  // Throws InvalidValueError / DimensionError / EmptyOutputError.
  void validate() const;

  // Per-block (post-conv, post-pool) lengths for input_length.
  std::vector<BlockShape> shapes() const;

  // Domain of the values entering block b's fused activation.
  ActivationDomain activation_domain(std::size_t block) const;

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

// Six blocks, channels 1-8-16-32-32-64-n_classes, kernel 7 everywhere,
// conv stride 2 in block 1 and 1 elsewhere, padding 5 with value 1,
// max pool 7/2 in every block.
NetConfig build_default_config(std::size_t n_classes, Mode mode, std::size_t input_length = 3600,
                               float bp_pad_value = 1.0F);

// Latent training state of one block.
struct BlockParams {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t taps = 0;
  std::vector<float> weights;  // [out][in][tap], latent reals
  std::vector<float> slope;    // PReLU a, per output channel
  std::vector<float> gamma;
  std::vector<float> beta;
  std::vector<float> running_mean;
  std::vector<float> running_var;

  float weight(std::size_t o, std::size_t c, std::size_t k) const {
    return weights[(o * in_channels + c) * taps + k];
  }
  BinaryTensor binarized_weights() const;
  BlockNormParams norm(double eps) const;

  friend bool operator==(const BlockParams&, const BlockParams&) = default;
};

struct TrainedParams {
  std::vector<BlockParams> blocks;
  float eps = 1e-5F;

  // Shapes against cfg and running_var >= 0. Throws DimensionError /
  // InvalidValueError.
  void validate(const NetConfig& cfg) const;

  friend bool operator==(const TrainedParams&, const TrainedParams&) = default;
};

// Weights uniform in [-scale, scale], PReLU a = 0.25, identity BatchNorm.
TrainedParams initial_params(const NetConfig& cfg, double weight_scale, std::mt19937_64& rng);

struct FusedBlock {
  BinaryTensor weights;
  // Threshold channels for blocks followed by a Sign, affine for the last.
  std::vector<FusedChannelParams> channels;

  friend bool operator==(const FusedBlock&, const FusedBlock&) = default;
};

struct FusedModel {
  NetConfig config;
  std::vector<FusedBlock> blocks;

  void validate() const;

  friend bool operator==(const FusedModel&, const FusedModel&) = default;
};

FusedModel fuse(const TrainedParams& params, const NetConfig& cfg);

// Re-runs verify_fusion on every channel of `model` against `params`.
std::vector<FusionReport> verify_model(const FusedModel& model, const TrainedParams& params);

struct Prediction {
  std::size_t label = 0;
  std::vector<double> logits;
};

// +1/-1 outputs of every block that feeds a Sign (all but the last).
struct ForwardTrace {
  std::vector<BinaryTensor> activations;
};

// Real-arithmetic inference on the latent parameters: weights binarized by
// sign, activations binarized at the entry of every conv but block 1 in BP
// mode (LP binarizes the input itself), BatchNorm on running statistics.
Prediction forward_reference(const TrainedParams& params, const NetConfig& cfg,
                             const RealFeatureMap& input, ForwardTrace* trace = nullptr);

// Deployment path. BP mode takes the real standardized input; LP mode takes
// the binarized input. The wrong kind throws InvalidInputError.
Prediction forward_fused(const FusedModel& model, const RealFeatureMap& input,
                         ForwardTrace* trace = nullptr);
Prediction forward_fused(const FusedModel& model, const BinaryTensor& input,
                         ForwardTrace* trace = nullptr);

// The fused model evaluated with float multiply-accumulate convolutions
// instead of XNOR-POPCOUNT. Baseline for throughput comparisons.
Prediction forward_fused_float(const FusedModel& model, const RealFeatureMap& input);

}  // namespace ecgbnn
