#include "ecgbnn/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "ecgbnn/errors.hpp"

namespace ecgbnn {

std::string_view to_string(Mode mode) { return mode == Mode::kLP ? "lp" : "bp"; }

Mode parse_mode(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "bp") return Mode::kBP;
  if (lower == "lp") return Mode::kLP;
  throw InvalidValueError("unknown mode '" + std::string(text) + "' (expected bp or lp)");
}

void NetConfig::validate() const {
  if (blocks.empty()) throw InvalidValueError("net config: no blocks");
  if (n_classes < 1) throw InvalidValueError("net config: n_classes must be >= 1");
  if (blocks.back().out_channels != n_classes) {
    throw DimensionError("net config: last block has " +
                         std::to_string(blocks.back().out_channels) +
                         " output channels but n_classes is " + std::to_string(n_classes));
  }
  if (blocks.front().in_channels != 1) {
    throw DimensionError("net config: block 1 must take a single input channel");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const BlockConfig& blk = blocks[b];
    if (blk.in_channels == 0 || blk.out_channels == 0) {
      throw InvalidValueError("net config: block " + std::to_string(b + 1) + " has zero channels");
    }
    if (b > 0 && blk.in_channels != blocks[b - 1].out_channels) {
      throw DimensionError("net config: block " + std::to_string(b + 1) + " expects " +
                           std::to_string(blk.in_channels) + " channels, previous block gives " +
                           std::to_string(blocks[b - 1].out_channels));
    }
    if (blk.conv.taps == 0 || blk.conv.stride == 0 || blk.pool_size == 0 ||
        blk.pool_stride == 0) {
      throw InvalidValueError("net config: block " + std::to_string(b + 1) +
                              " has a zero kernel, stride or pool parameter");
    }
    const bool binary_input = b > 0 || mode == Mode::kLP;
    if (binary_input && blk.conv.pad_value != 1.0F && blk.conv.pad_value != -1.0F) {
      throw InvalidValueError("net config: block " + std::to_string(b + 1) +
                              " pads a binary input and needs pad value +1 or -1");
    }
    if (!std::isfinite(blk.conv.pad_value)) {
      throw InvalidValueError("net config: non-finite pad value");
    }
  }
  (void)shapes();
}

std::vector<BlockShape> NetConfig::shapes() const {
  std::vector<BlockShape> out;
  std::size_t len = input_length;
  for (const BlockConfig& blk : blocks) {
    BlockShape s;
    s.conv_length = conv_output_length(len, blk.conv.taps, blk.conv.stride, blk.conv.padding);
    s.pool_length = pool_output_length(s.conv_length, blk.pool_size, blk.pool_stride);
    len = s.pool_length;
    out.push_back(s);
  }
  return out;
}

ActivationDomain NetConfig::activation_domain(std::size_t block) const {
  if (block == 0 && mode == Mode::kBP) return RealDomain{};
  const BlockConfig& blk = blocks.at(block);
  return IntegerDomain{static_cast<std::int32_t>(blk.in_channels * blk.conv.taps)};
}

NetConfig build_default_config(std::size_t n_classes, Mode mode, std::size_t input_length,
                               float bp_pad_value) {
  static constexpr std::size_t kChannels[] = {1, 8, 16, 32, 32, 64};
  NetConfig cfg;
  cfg.n_classes = n_classes;
  cfg.mode = mode;
  cfg.input_length = input_length;
  for (std::size_t b = 0; b < 6; ++b) {
    BlockConfig blk;
    blk.in_channels = kChannels[b];
    blk.out_channels = b + 1 < 6 ? kChannels[b + 1] : n_classes;
    blk.conv.taps = 7;
    blk.conv.stride = b == 0 ? 2 : 1;
    blk.conv.padding = 5;
    blk.conv.pad_value = (b == 0 && mode == Mode::kBP) ? bp_pad_value : 1.0F;
    blk.pool_size = 7;
    blk.pool_stride = 2;
    cfg.blocks.push_back(blk);
  }
  return cfg;
}

BinaryTensor BlockParams::binarized_weights() const {
  BinaryTensor w = BinaryTensor::weights(out_channels, in_channels, taps);
  for (std::size_t o = 0; o < out_channels; ++o) {
    for (std::size_t c = 0; c < in_channels; ++c) {
      for (std::size_t k = 0; k < taps; ++k) w.set(o, c, k, sign(weight(o, c, k)));
    }
  }
  return w;
}

BlockNormParams BlockParams::norm(double eps) const {
  return {gamma, beta, running_mean, running_var, slope, eps};
}

void TrainedParams::validate(const NetConfig& cfg) const {
  if (blocks.size() != cfg.blocks.size()) {
    throw DimensionError("params: " + std::to_string(blocks.size()) + " blocks, config has " +
                         std::to_string(cfg.blocks.size()));
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const BlockParams& p = blocks[b];
    const BlockConfig& c = cfg.blocks[b];
    const std::size_t co = c.out_channels;
    if (p.in_channels != c.in_channels || p.out_channels != co || p.taps != c.conv.taps ||
        p.weights.size() != co * c.in_channels * c.conv.taps || p.slope.size() != co ||
        p.gamma.size() != co || p.beta.size() != co || p.running_mean.size() != co ||
        p.running_var.size() != co) {
      throw DimensionError("params: block " + std::to_string(b + 1) +
                           " shapes do not match the config");
    }
    for (float v : p.running_var) {
      if (!(v >= 0.0F)) throw InvalidValueError("params: negative or NaN running variance");
    }
  }
  if (!(eps > 0.0F)) throw InvalidValueError("params: eps must be > 0");
}

TrainedParams initial_params(const NetConfig& cfg, double weight_scale, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-weight_scale, weight_scale);
  TrainedParams p;
  for (const BlockConfig& c : cfg.blocks) {
    BlockParams b;
    b.in_channels = c.in_channels;
    b.out_channels = c.out_channels;
    b.taps = c.conv.taps;
    b.weights.resize(c.out_channels * c.in_channels * c.conv.taps);
    for (float& w : b.weights) w = static_cast<float>(dist(rng));
    b.slope.assign(c.out_channels, 0.25F);
    b.gamma.assign(c.out_channels, 1.0F);
    b.beta.assign(c.out_channels, 0.0F);
    b.running_mean.assign(c.out_channels, 0.0F);
    b.running_var.assign(c.out_channels, 1.0F);
    p.blocks.push_back(std::move(b));
  }
  return p;
}

void FusedModel::validate() const {
  config.validate();
  if (blocks.size() != config.blocks.size()) {
    throw DimensionError("fused model: block count does not match the config");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const BlockConfig& c = config.blocks[b];
    const FusedBlock& fb = blocks[b];
    if (fb.weights.rows() != c.out_channels || fb.weights.in_channels() != c.in_channels ||
        fb.weights.taps() != c.conv.taps || fb.channels.size() != c.out_channels) {
      throw DimensionError("fused model: block " + std::to_string(b + 1) +
                           " shapes do not match the config");
    }
    const bool last = b + 1 == blocks.size();
    const bool real = std::holds_alternative<RealDomain>(config.activation_domain(b));
    for (const FusedChannelParams& ch : fb.channels) {
      const bool ok = last ? std::holds_alternative<AffineChannel>(ch)
                           : (real ? std::holds_alternative<RealThresholdChannel>(ch)
                                   : std::holds_alternative<IntThresholdChannel>(ch));
      if (!ok) {
        throw InvalidValueError("fused model: block " + std::to_string(b + 1) +
                                " has a channel of the wrong kind");
      }
    }
  }
}

FusedModel fuse(const TrainedParams& params, const NetConfig& cfg) {
  cfg.validate();
  params.validate(cfg);
  FusedModel m;
  m.config = cfg;
  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const BlockParams& bp = params.blocks[b];
    FusedBlock fb;
    fb.weights = bp.binarized_weights();
    fb.channels =
        fuse_block(bp.norm(params.eps), b + 1 < cfg.blocks.size(), cfg.activation_domain(b));
    m.blocks.push_back(std::move(fb));
  }
  return m;
}

std::vector<FusionReport> verify_model(const FusedModel& model, const TrainedParams& params) {
  params.validate(model.config);
  std::vector<FusionReport> out;
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    const BlockNormParams norm = params.blocks[b].norm(params.eps);
    const ActivationDomain domain = model.config.activation_domain(b);
    for (std::size_t c = 0; c < model.blocks[b].channels.size(); ++c) {
      out.push_back(verify_fusion(model.blocks[b].channels[c], norm.channel(c), domain));
    }
  }
  return out;
}

namespace {

void check_input_length(const NetConfig& cfg, std::size_t channels, std::size_t length) {
  if (channels != 1 || length != cfg.input_length) {
    throw DimensionError("input is (" + std::to_string(channels) + "," + std::to_string(length) +
                         "), model expects (1," + std::to_string(cfg.input_length) + ")");
  }
}

BinaryTensor binarize_map(const FeatureMap<double>& x) {
  BinaryTensor out = BinaryTensor::activations(x.channels, x.length);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t t = 0; t < x.length; ++t) out.set(c, t, sign(x.at(c, t)));
  }
  return out;
}

FeatureMap<double> to_real(const BinaryTensor& x) {
  FeatureMap<double> out(x.channels(), x.length());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    for (std::size_t t = 0; t < x.length(); ++t) out.at(c, t) = x.at(c, t);
  }
  return out;
}

Prediction finish(std::vector<double> logits) {
  Prediction p;
  p.label = argmax_head(logits);
  p.logits = std::move(logits);
  return p;
}

// Fused blocks from `first` on, starting from a binary activation map.
Prediction run_binary_blocks(const FusedModel& model, std::size_t first, BinaryTensor x,
                             ForwardTrace* trace) {
  const std::size_t n_blocks = model.blocks.size();
  for (std::size_t b = first; b < n_blocks; ++b) {
    const BlockConfig& cfg = model.config.blocks[b];
    const FusedBlock& fb = model.blocks[b];
    const IntFeatureMap pooled =
        maxpool1d(binary_conv1d(x, fb.weights, cfg.conv), cfg.pool_size, cfg.pool_stride);
    if (b + 1 == n_blocks) {
      std::vector<double> logits(pooled.channels, 0.0);
      for (std::size_t c = 0; c < pooled.channels; ++c) {
        const auto& aff = std::get<AffineChannel>(fb.channels[c]);
        for (std::size_t t = 0; t < pooled.length; ++t) {
          logits[c] += fused_affine(pooled.at(c, t), aff.k, aff.b, aff.a);
        }
      }
      return finish(std::move(logits));
    }
    BinaryTensor next = BinaryTensor::activations(pooled.channels, pooled.length);
    for (std::size_t c = 0; c < pooled.channels; ++c) {
      const auto& th = std::get<IntThresholdChannel>(fb.channels[c]);
      for (std::size_t t = 0; t < pooled.length; ++t) {
        next.set(c, t, fused_activation(pooled.at(c, t), th));
      }
    }
    if (trace != nullptr) trace->activations.push_back(next);
    x = std::move(next);
  }
  throw Error("fused model has no blocks");
}

}  // namespace

Prediction forward_reference(const TrainedParams& params, const NetConfig& cfg,
                             const RealFeatureMap& input, ForwardTrace* trace) {
  check_input_length(cfg, input.channels, input.length);
  params.validate(cfg);
  const std::size_t n_blocks = cfg.blocks.size();

  // Block-1 input. In BP mode the first conv runs on the real signal in
  // float, the same arithmetic the deployment path uses.
  FeatureMap<double> x;
  std::size_t first = 0;
  if (cfg.mode == Mode::kBP) {
    const BlockConfig& blk = cfg.blocks[0];
    const RealFeatureMap conv =
        real_input_conv1d(input, params.blocks[0].binarized_weights(), blk.conv);
    const RealFeatureMap pooled = maxpool1d(conv, blk.pool_size, blk.pool_stride);
    x = FeatureMap<double>(pooled.channels, pooled.length);
    std::copy(pooled.values.begin(), pooled.values.end(), x.values.begin());
    first = 1;
  } else {
    x = FeatureMap<double>(1, input.length);
    for (std::size_t t = 0; t < input.length; ++t) x.at(0, t) = sign(input.at(0, t));
  }

  for (std::size_t b = 0; b < n_blocks; ++b) {
    const BlockConfig& blk = cfg.blocks[b];
    const BlockParams& p = params.blocks[b];
    if (b >= first) {
      x = maxpool1d(signed_conv1d(x, p.binarized_weights(), blk.conv), blk.pool_size,
                    blk.pool_stride);
    }
    for (std::size_t c = 0; c < x.channels; ++c) {
      for (std::size_t t = 0; t < x.length; ++t) {
        x.at(c, t) = batchnorm_infer(prelu(x.at(c, t), p.slope[c]), p.running_mean[c],
                                     p.running_var[c], p.gamma[c], p.beta[c], params.eps);
      }
    }
    if (b + 1 == n_blocks) break;
    const BinaryTensor bits = binarize_map(x);
    if (trace != nullptr) trace->activations.push_back(bits);
    x = to_real(bits);
  }
  return finish(gsp(x));
}

Prediction forward_fused(const FusedModel& model, const RealFeatureMap& input,
                         ForwardTrace* trace) {
  if (model.config.mode != Mode::kBP) {
    throw InvalidInputError("LP model expects a binarized input");
  }
  check_input_length(model.config, input.channels, input.length);
  const BlockConfig& blk = model.config.blocks[0];
  const RealFeatureMap pooled = maxpool1d(real_input_conv1d(input, model.blocks[0].weights, blk.conv),
                                          blk.pool_size, blk.pool_stride);
  BinaryTensor x = BinaryTensor::activations(pooled.channels, pooled.length);
  for (std::size_t c = 0; c < pooled.channels; ++c) {
    const auto& th = std::get<RealThresholdChannel>(model.blocks[0].channels[c]);
    for (std::size_t t = 0; t < pooled.length; ++t) {
      x.set(c, t, fused_activation(pooled.at(c, t), th));
    }
  }
  if (trace != nullptr) trace->activations.push_back(x);
  return run_binary_blocks(model, 1, std::move(x), trace);
}

Prediction forward_fused(const FusedModel& model, const BinaryTensor& input,
                         ForwardTrace* trace) {
  if (model.config.mode != Mode::kLP) {
    throw InvalidInputError("BP model expects a real-valued input");
  }
  check_input_length(model.config, input.channels(), input.length());
  return run_binary_blocks(model, 0, input, trace);
}

Prediction forward_fused_float(const FusedModel& model, const RealFeatureMap& input) {
  check_input_length(model.config, input.channels, input.length);
  const std::size_t n_blocks = model.blocks.size();
  RealFeatureMap x = input;
  if (model.config.mode == Mode::kLP) {
    for (float& v : x.values) v = static_cast<float>(sign(v));
  }
  for (std::size_t b = 0; b < n_blocks; ++b) {
    const BlockConfig& blk = model.config.blocks[b];
    const FusedBlock& fb = model.blocks[b];
    RealFeatureMap pooled =
        maxpool1d(signed_conv1d(x, fb.weights, blk.conv), blk.pool_size, blk.pool_stride);
    if (b + 1 == n_blocks) {
      std::vector<double> logits(pooled.channels, 0.0);
      for (std::size_t c = 0; c < pooled.channels; ++c) {
        const auto& aff = std::get<AffineChannel>(fb.channels[c]);
        for (std::size_t t = 0; t < pooled.length; ++t) {
          const double v = pooled.at(c, t);
          logits[c] += v >= 0.0 ? aff.k * v + aff.b : aff.a * aff.k * v + aff.b;
        }
      }
      return finish(std::move(logits));
    }
    for (std::size_t c = 0; c < pooled.channels; ++c) {
      for (std::size_t t = 0; t < pooled.length; ++t) {
        float& v = pooled.at(c, t);
        int bit = 0;
        if (const auto* r = std::get_if<RealThresholdChannel>(&fb.channels[c])) {
          bit = r->decide(v);
        } else {
          bit = std::get<IntThresholdChannel>(fb.channels[c]).decide(static_cast<std::int32_t>(v));
        }
        v = static_cast<float>(bit);
      }
    }
    x = std::move(pooled);
  }
  throw Error("fused model has no blocks");
}

}  // namespace ecgbnn
