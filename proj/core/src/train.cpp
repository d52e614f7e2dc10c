#include "ecgbnn/train.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "ecgbnn/errors.hpp"
#include "ecgbnn/ops.hpp"

namespace ecgbnn {

std::string_view to_string(SurrogateKind kind) {
  return kind == SurrogateKind::kPolynomial ? "polynomial" : "clipped_ste";
}

SurrogateKind parse_surrogate(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "clipped_ste" || lower == "ste") return SurrogateKind::kClippedSte;
  if (lower == "polynomial" || lower == "poly") return SurrogateKind::kPolynomial;
  throw InvalidValueError("unknown surrogate '" + std::string(text) +
                          "' (expected clipped_ste or polynomial)");
}

double SurrogateGradient::derivative(double x) const {
  const double ax = std::abs(x);
  if (kind == SurrogateKind::kPolynomial) return ax <= 1.0 ? 2.0 - 2.0 * ax : 0.0;
  return ax <= clip ? 1.0 : 0.0;
}

double surrogate_backward(double grad_out, double pre_activation, const SurrogateGradient& s) {
  return grad_out * s.derivative(pre_activation);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidValueError("train config: batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidValueError("train config: learning rate must be > 0");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) {
    throw InvalidValueError("train config: bn momentum must be in [0, 1]");
  }
  if (!(weight_init_scale > 0.0)) throw InvalidValueError("train config: init scale must be > 0");
  if (!(surrogate.clip > 0.0)) throw InvalidValueError("train config: surrogate clip must be > 0");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0) ||
      !(adam_eps > 0.0)) {
    throw InvalidValueError("train config: invalid adam parameters");
  }
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) {
    throw InvalidValueError("train config: sgd momentum must be in [0, 1)");
  }
}

TrainConfig default_train_config(std::size_t n_classes) {
  TrainConfig cfg;
  if (n_classes == 17) {
    cfg.batch_size = 64;
    cfg.learning_rate = 0.002;
  } else {
    cfg.batch_size = 512;
    cfg.learning_rate = 0.02;
  }
  cfg.epochs = 1000;
  return cfg;
}

OptimizerState initial_optimizer_state(const TrainedParams& params) {
  OptimizerState s;
  for (const BlockParams& b : params.blocks) {
    for (std::size_t n : {b.weights.size(), b.slope.size(), b.gamma.size(), b.beta.size()}) {
      s.first_moment.emplace_back(n, 0.0F);
      s.second_moment.emplace_back(n, 0.0F);
    }
  }
  return s;
}

BinaryTensor lp_quantize_input(std::span<const float> segment) {
  BinaryTensor out = BinaryTensor::activations(1, segment.size());
  for (std::size_t t = 0; t < segment.size(); ++t) out.set(0, t, sign(segment[t]));
  return out;
}

BatchTensor batchnorm_train_forward(const BatchTensor& x, std::span<const float> gamma,
                                    std::span<const float> beta, double eps,
                                    BatchNormCache& cache) {
  const std::size_t n = x.batch * x.length;
  if (gamma.size() != x.channels || beta.size() != x.channels) {
    throw DimensionError("batchnorm: parameter count does not match channels");
  }
  if (n == 0) throw EmptyOutputError("batchnorm: empty batch");
  cache.mean.assign(x.channels, 0.0);
  cache.var.assign(x.channels, 0.0);
  cache.inv_std.assign(x.channels, 0.0);
  cache.normalized = BatchTensor(x.batch, x.channels, x.length);
  BatchTensor y(x.batch, x.channels, x.length);
  for (std::size_t c = 0; c < x.channels; ++c) {
    double sum = 0.0;
    for (std::size_t b = 0; b < x.batch; ++b) {
      for (std::size_t t = 0; t < x.length; ++t) sum += x.at(b, c, t);
    }
    const double mean = sum / static_cast<double>(n);
    double sq = 0.0;
    for (std::size_t b = 0; b < x.batch; ++b) {
      for (std::size_t t = 0; t < x.length; ++t) {
        const double d = x.at(b, c, t) - mean;
        sq += d * d;
      }
    }
    const double var = sq / static_cast<double>(n);
    const double inv_std = 1.0 / std::sqrt(var + eps);
    cache.mean[c] = mean;
    cache.var[c] = var;
    cache.inv_std[c] = inv_std;
    for (std::size_t b = 0; b < x.batch; ++b) {
      for (std::size_t t = 0; t < x.length; ++t) {
        const double xh = (x.at(b, c, t) - mean) * inv_std;
        cache.normalized.at(b, c, t) = xh;
        y.at(b, c, t) = gamma[c] * xh + beta[c];
      }
    }
  }
  return y;
}

void update_running_stats(std::span<float> running_mean, std::span<float> running_var,
                          const BatchNormCache& cache, double momentum) {
  for (std::size_t c = 0; c < running_mean.size(); ++c) {
    running_mean[c] = static_cast<float>((1.0 - momentum) * running_mean[c] + momentum * cache.mean[c]);
    running_var[c] = static_cast<float>((1.0 - momentum) * running_var[c] + momentum * cache.var[c]);
  }
}

BatchTensor batchnorm_train_backward(const BatchTensor& grad_out, const BatchNormCache& cache,
                                     std::span<const float> gamma, std::span<double> dgamma,
                                     std::span<double> dbeta) {
  const BatchTensor& xh = cache.normalized;
  const auto n = static_cast<double>(grad_out.batch * grad_out.length);
  BatchTensor dx(grad_out.batch, grad_out.channels, grad_out.length);
  for (std::size_t c = 0; c < grad_out.channels; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xh = 0.0;
    for (std::size_t b = 0; b < grad_out.batch; ++b) {
      for (std::size_t t = 0; t < grad_out.length; ++t) {
        sum_dy += grad_out.at(b, c, t);
        sum_dy_xh += grad_out.at(b, c, t) * xh.at(b, c, t);
      }
    }
    dgamma[c] += sum_dy_xh;
    dbeta[c] += sum_dy;
    // With dxhat = dy * gamma:
    // dx = inv_std / n * (n * dxhat - sum(dxhat) - xhat * sum(dxhat * xhat))
    const double g = gamma[c];
    const double scale = cache.inv_std[c] * g / n;
    for (std::size_t b = 0; b < grad_out.batch; ++b) {
      for (std::size_t t = 0; t < grad_out.length; ++t) {
        dx.at(b, c, t) = scale * (n * grad_out.at(b, c, t) - sum_dy - xh.at(b, c, t) * sum_dy_xh);
      }
    }
  }
  return dx;
}

LossAndGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label) {
  if (label >= logits.size()) {
    throw InvalidLabelError("cross entropy: label " + std::to_string(label) + " with " +
                            std::to_string(logits.size()) + " logits");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - peak);
  const double log_denom = std::log(denom);
  LossAndGrad out;
  out.loss = -(logits[label] - peak - log_denom);
  out.grad.resize(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.grad[i] = std::exp(logits[i] - peak - log_denom) - (i == label ? 1.0 : 0.0);
  }
  return out;
}

namespace {

struct BlockCache {
  BatchTensor input;    // kept only when the input went through a Sign
  bool signed_input = false;
  BatchTensor padded;   // conv operand with padding
  std::vector<double> w;
  std::size_t conv_length = 0;
  std::vector<std::uint32_t> pool_index;  // argmax position in the conv output
  BatchTensor pooled;   // pre-PReLU
  BatchNormCache bn;
};

BatchTensor pad_operand(const BatchTensor& x, std::size_t padding, double pad_value, bool apply_sign) {
  BatchTensor out(x.batch, x.channels, x.length + 2 * padding, pad_value);
  for (std::size_t b = 0; b < x.batch; ++b) {
    for (std::size_t c = 0; c < x.channels; ++c) {
      for (std::size_t t = 0; t < x.length; ++t) {
        const double v = x.at(b, c, t);
        out.at(b, c, t + padding) = apply_sign ? static_cast<double>(sign(v)) : v;
      }
    }
  }
  return out;
}

BatchTensor conv_forward(const BatchTensor& padded, const std::vector<double>& w,
                         std::size_t out_channels, std::size_t taps, std::size_t stride,
                         std::size_t out_len) {
  const std::size_t cin = padded.channels;
  BatchTensor y(padded.batch, out_channels, out_len);
  for (std::size_t b = 0; b < padded.batch; ++b) {
    for (std::size_t o = 0; o < out_channels; ++o) {
      double* yrow = &y.at(b, o, 0);
      for (std::size_t c = 0; c < cin; ++c) {
        const double* wrow = &w[(o * cin + c) * taps];
        const double* xrow = &padded.values[(b * cin + c) * padded.length];
        for (std::size_t t = 0; t < out_len; ++t) {
          const double* xw = xrow + t * stride;
          double s = 0.0;
          for (std::size_t k = 0; k < taps; ++k) s += wrow[k] * xw[k];
          yrow[t] += s;
        }
      }
    }
  }
  return y;
}

}  // namespace

StepResult forward_backward(const TrainedParams& params, const NetConfig& cfg,
                            const TrainConfig& train_cfg, const Batch& batch) {
  if (batch.size == 0) throw InvalidInputError("forward_backward: empty batch");
  if (batch.length != cfg.input_length || batch.inputs.size() != batch.size * batch.length ||
      batch.labels.size() != batch.size) {
    throw DimensionError("forward_backward: batch shape does not match the config");
  }
  params.validate(cfg);
  const std::size_t n_blocks = cfg.blocks.size();
  const double eps = params.eps;

  BatchTensor x(batch.size, 1, batch.length);
  x.values.assign(batch.inputs.begin(), batch.inputs.end());
  if (cfg.mode == Mode::kLP) {
    for (double v : x.values) {
      if (v != 1.0 && v != -1.0) {
        throw InvalidInputError("forward_backward: LP mode needs +1/-1 inputs");
      }
    }
  }

  std::vector<BlockCache> caches(n_blocks);
  for (std::size_t bi = 0; bi < n_blocks; ++bi) {
    const BlockConfig& blk = cfg.blocks[bi];
    const BlockParams& p = params.blocks[bi];
    BlockCache& cache = caches[bi];

    cache.signed_input = train_cfg.binarize && bi > 0;
    cache.padded = pad_operand(x, blk.conv.padding, blk.conv.pad_value, cache.signed_input);
    if (cache.signed_input) cache.input = std::move(x);

    cache.w.resize(p.weights.size());
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
      cache.w[i] = train_cfg.binarize ? static_cast<double>(sign(p.weights[i])) : p.weights[i];
    }
    const std::size_t in_len = cache.padded.length - 2 * blk.conv.padding;
    cache.conv_length = conv_output_length(in_len, blk.conv.taps, blk.conv.stride, blk.conv.padding);
    const BatchTensor y = conv_forward(cache.padded, cache.w, blk.out_channels, blk.conv.taps,
                                       blk.conv.stride, cache.conv_length);

    const std::size_t pool_len = pool_output_length(cache.conv_length, blk.pool_size, blk.pool_stride);
    cache.pooled = BatchTensor(batch.size, blk.out_channels, pool_len);
    cache.pool_index.assign(batch.size * blk.out_channels * pool_len, 0);
    BatchTensor q(batch.size, blk.out_channels, pool_len);
    for (std::size_t b = 0; b < batch.size; ++b) {
      for (std::size_t c = 0; c < blk.out_channels; ++c) {
        for (std::size_t t = 0; t < pool_len; ++t) {
          std::size_t best = t * blk.pool_stride;
          for (std::size_t j = 1; j < blk.pool_size; ++j) {
            if (y.at(b, c, t * blk.pool_stride + j) > y.at(b, c, best)) best = t * blk.pool_stride + j;
          }
          const double v = y.at(b, c, best);
          cache.pool_index[(b * blk.out_channels + c) * pool_len + t] = static_cast<std::uint32_t>(best);
          cache.pooled.at(b, c, t) = v;
          q.at(b, c, t) = prelu(v, p.slope[c]);
        }
      }
    }
    x = batchnorm_train_forward(q, p.gamma, p.beta, eps, cache.bn);
  }

  // Head: global sum pooling, softmax cross-entropy averaged over the batch.
  const std::size_t n_classes = x.channels;
  StepResult result;
  BatchTensor dz(batch.size, n_classes, x.length);
  const double inv_batch = 1.0 / static_cast<double>(batch.size);
  std::vector<double> logits(n_classes);
  for (std::size_t b = 0; b < batch.size; ++b) {
    for (std::size_t c = 0; c < n_classes; ++c) {
      double s = 0.0;
      for (std::size_t t = 0; t < x.length; ++t) s += x.at(b, c, t);
      logits[c] = s;
    }
    const LossAndGrad lg = softmax_cross_entropy(logits, batch.labels[b]);
    result.loss += lg.loss * inv_batch;
    if (argmax_head(logits) == batch.labels[b]) ++result.correct;
    for (std::size_t c = 0; c < n_classes; ++c) {
      for (std::size_t t = 0; t < x.length; ++t) dz.at(b, c, t) = lg.grad[c] * inv_batch;
    }
  }

  result.grads.blocks.resize(n_blocks);
  for (std::size_t bi = n_blocks; bi-- > 0;) {
    const BlockConfig& blk = cfg.blocks[bi];
    const BlockParams& p = params.blocks[bi];
    BlockCache& cache = caches[bi];
    BlockGradients& g = result.grads.blocks[bi];
    g.weights.assign(p.weights.size(), 0.0);
    g.slope.assign(blk.out_channels, 0.0);
    g.gamma.assign(blk.out_channels, 0.0);
    g.beta.assign(blk.out_channels, 0.0);

    const BatchTensor dq = batchnorm_train_backward(dz, cache.bn, p.gamma, g.gamma, g.beta);

    const std::size_t pool_len = cache.pooled.length;
    BatchTensor dy(batch.size, blk.out_channels, cache.conv_length);
    for (std::size_t b = 0; b < batch.size; ++b) {
      for (std::size_t c = 0; c < blk.out_channels; ++c) {
        for (std::size_t t = 0; t < pool_len; ++t) {
          const double v = cache.pooled.at(b, c, t);
          const double d = dq.at(b, c, t);
          double dp = d;
          if (v < 0.0) {
            g.slope[c] += d * v;
            dp = d * p.slope[c];
          }
          dy.at(b, c, cache.pool_index[(b * blk.out_channels + c) * pool_len + t]) += dp;
        }
      }
    }

    const std::size_t cin = blk.in_channels;
    const std::size_t taps = blk.conv.taps;
    const std::size_t stride = blk.conv.stride;
    const std::size_t padding = blk.conv.padding;
    const bool need_input_grad = bi > 0;
    BatchTensor dpadded;
    if (need_input_grad) dpadded = BatchTensor(batch.size, cin, cache.padded.length);
    for (std::size_t b = 0; b < batch.size; ++b) {
      for (std::size_t o = 0; o < blk.out_channels; ++o) {
        const double* dyrow = &dy.at(b, o, 0);
        for (std::size_t c = 0; c < cin; ++c) {
          double* dwrow = &g.weights[(o * cin + c) * taps];
          const double* wrow = &cache.w[(o * cin + c) * taps];
          const double* xrow = &cache.padded.values[(b * cin + c) * cache.padded.length];
          double* dxrow = need_input_grad ? &dpadded.values[(b * cin + c) * dpadded.length] : nullptr;
          for (std::size_t t = 0; t < cache.conv_length; ++t) {
            const double d = dyrow[t];
            if (d == 0.0) continue;
            const double* xw = xrow + t * stride;
            for (std::size_t k = 0; k < taps; ++k) dwrow[k] += d * xw[k];
            if (dxrow != nullptr) {
              double* dxw = dxrow + t * stride;
              for (std::size_t k = 0; k < taps; ++k) dxw[k] += d * wrow[k];
            }
          }
        }
      }
    }

    if (train_cfg.binarize) {
      for (std::size_t i = 0; i < g.weights.size(); ++i) {
        g.weights[i] = surrogate_backward(g.weights[i], p.weights[i], train_cfg.surrogate);
      }
    }

    if (need_input_grad) {
      const std::size_t in_len = cache.padded.length - 2 * padding;
      BatchTensor dx(batch.size, cin, in_len);
      for (std::size_t b = 0; b < batch.size; ++b) {
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t t = 0; t < in_len; ++t) {
            const double d = dpadded.at(b, c, t + padding);
            dx.at(b, c, t) = cache.signed_input
                                 ? surrogate_backward(d, cache.input.at(b, c, t), train_cfg.surrogate)
                                 : d;
          }
        }
      }
      dz = std::move(dx);
    }
  }

  result.norm_stats.reserve(n_blocks);
  for (BlockCache& c : caches) result.norm_stats.push_back(std::move(c.bn));
  return result;
}

namespace {

template <typename F>
void visit_trainable(TrainedParams& params, const Gradients& grads, F&& f) {
  std::size_t index = 0;
  for (std::size_t b = 0; b < params.blocks.size(); ++b) {
    BlockParams& p = params.blocks[b];
    const BlockGradients& g = grads.blocks[b];
    f(index++, p.weights, g.weights, true);
    f(index++, p.slope, g.slope, false);
    f(index++, p.gamma, g.gamma, false);
    f(index++, p.beta, g.beta, false);
  }
}

}  // namespace

void optimizer_step(TrainedParams& params, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& train_cfg) {
  if (grads.blocks.size() != params.blocks.size()) {
    throw DimensionError("optimizer_step: gradient block count mismatch");
  }
  if (state.first_moment.empty()) state = initial_optimizer_state(params);
  ++state.step;
  const double lr = train_cfg.learning_rate;
  const double b1 = train_cfg.adam_beta1;
  const double b2 = train_cfg.adam_beta2;
  const double step = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(b1, step);
  const double bias2 = 1.0 - std::pow(b2, step);

  visit_trainable(params, grads, [&](std::size_t i, std::vector<float>& p,
                                     const std::vector<double>& g, bool latent_weight) {
    if (g.size() != p.size() || state.first_moment[i].size() != p.size()) {
      throw DimensionError("optimizer_step: tensor shape mismatch");
    }
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      double value = p[j];
      if (train_cfg.optimizer == OptimizerKind::kAdam) {
        m[j] = static_cast<float>(b1 * m[j] + (1.0 - b1) * g[j]);
        v[j] = static_cast<float>(b2 * v[j] + (1.0 - b2) * g[j] * g[j]);
        const double m_hat = m[j] / bias1;
        const double v_hat = v[j] / bias2;
        value -= lr * m_hat / (std::sqrt(v_hat) + train_cfg.adam_eps);
      } else {
        m[j] = static_cast<float>(train_cfg.sgd_momentum * m[j] + g[j]);
        value -= lr * m[j];
      }
      if (latent_weight) value = std::clamp(value, -1.0, 1.0);
      p[j] = static_cast<float>(value);
    }
  });
}

Batch make_batch(const Dataset& data, std::span<const std::size_t> indices, Mode mode) {
  Batch batch;
  batch.size = indices.size();
  batch.length = data.length;
  batch.inputs.reserve(batch.size * batch.length);
  for (std::size_t idx : indices) {
    const EcgSegment& s = data.segments.at(idx);
    for (float v : s.samples) {
      batch.inputs.push_back(mode == Mode::kLP ? static_cast<double>(sign(v)) : static_cast<double>(v));
    }
    batch.labels.push_back(s.label);
  }
  return batch;
}

double reference_accuracy(const TrainedParams& params, const NetConfig& cfg, const Dataset& data) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  RealFeatureMap input(1, data.length);
  for (const EcgSegment& s : data.segments) {
    std::copy(s.samples.begin(), s.samples.end(), input.values.begin());
    if (forward_reference(params, cfg, input).label == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

void check_dataset(const Dataset& data, const NetConfig& net, const char* what) {
  if (data.empty()) throw InvalidInputError(std::string(what) + " set is empty");
  if (data.length != net.input_length) {
    throw DimensionError(std::string(what) + " segments have length " + std::to_string(data.length) +
                         ", network expects " + std::to_string(net.input_length));
  }
  for (const EcgSegment& s : data.segments) {
    if (s.label >= net.n_classes) {
      throw InvalidLabelError(std::string(what) + " label " + std::to_string(s.label) +
                              " outside the model's " + std::to_string(net.n_classes) + " classes");
    }
    if (s.samples.size() != data.length) {
      throw DimensionError(std::string(what) + " set has a segment of the wrong length");
    }
  }
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

}  // namespace

Trainer::Trainer(NetConfig net, TrainConfig train_cfg)
    : net_(std::move(net)), train_(train_cfg), rng_(train_cfg.seed) {
  net_.validate();
  train_.validate();
  params_ = initial_params(net_, train_.weight_init_scale, rng_);
  opt_ = initial_optimizer_state(params_);
}

Trainer::Trainer(TrainingState state)
    : net_(std::move(state.net)),
      train_(state.train),
      params_(std::move(state.params)),
      opt_(std::move(state.optimizer)),
      rng_(state.train.seed),
      epoch_(state.epoch),
      history_(std::move(state.history)) {
  net_.validate();
  train_.validate();
  params_.validate(net_);
  if (opt_.first_moment.empty()) opt_ = initial_optimizer_state(params_);
  if (!state.rng_state.empty()) {
    std::istringstream is(state.rng_state);
    is >> rng_;
    if (!is) throw InvalidValueError("trainer: malformed rng state");
  }
}

EpochRecord Trainer::run_epoch(const Dataset& train, const Dataset* eval) {
  check_dataset(train, net_, "training");
  if (eval != nullptr) check_dataset(*eval, net_, "evaluation");

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);

  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += train_.batch_size) {
    const std::size_t end = std::min(order.size(), start + train_.batch_size);
    const Batch batch =
        make_batch(train, std::span<const std::size_t>(order).subspan(start, end - start), net_.mode);
    const StepResult step = forward_backward(params_, net_, train_, batch);
    for (std::size_t b = 0; b < params_.blocks.size(); ++b) {
      BlockParams& p = params_.blocks[b];
      update_running_stats(p.running_mean, p.running_var, step.norm_stats[b], train_.bn_momentum);
    }
    optimizer_step(params_, step.grads, opt_, train_);
    loss_sum += step.loss * static_cast<double>(batch.size);
    correct += step.correct;
  }

  EpochRecord rec;
  rec.epoch = ++epoch_;
  rec.train_loss = loss_sum / static_cast<double>(train.size());
  rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(train.size());
  if (eval != nullptr) rec.eval_accuracy = reference_accuracy(params_, net_, *eval);
  history_.push_back(rec);
  return rec;
}

void Trainer::fit(const Dataset& train, const Dataset* eval, const EpochCallback& on_epoch) {
  check_dataset(train, net_, "training");
  while (epoch_ < train_.epochs) {
    const EpochRecord rec = run_epoch(train, eval);
    if (on_epoch) on_epoch(rec);
  }
}

TrainingState Trainer::state() const {
  return {net_, train_, params_, opt_, rng_text(rng_), epoch_, history_};
}

FitResult fit(const TrainedParams& initial, const Dataset& train, const Dataset* eval,
              const NetConfig& cfg, const TrainConfig& train_cfg, const EpochCallback& on_epoch) {
  TrainingState state;
  state.net = cfg;
  state.train = train_cfg;
  state.params = initial;
  state.optimizer = initial_optimizer_state(initial);
  state.rng_state = rng_text(std::mt19937_64(train_cfg.seed));
  Trainer trainer(std::move(state));
  trainer.fit(train, eval, on_epoch);
  return {trainer.params(), trainer.history()};
}

}  // namespace ecgbnn
