#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ecgbnn/bintensor.hpp"
#include "ecgbnn/data.hpp"
#include "ecgbnn/model.hpp"

namespace ecgbnn {

enum class OptimizerKind : std::uint8_t { kAdam = 0, kSgd = 1 };
enum class SurrogateKind : std::uint8_t { kClippedSte = 0, kPolynomial = 1 };

std::string_view to_string(SurrogateKind kind);
// "clipped_ste" / "ste" or "polynomial" / "poly".
SurrogateKind parse_surrogate(std::string_view text);

// Stand-in derivative for Sign during backprop. Zero outside a bounded
// interval around the origin.
struct SurrogateGradient {
  SurrogateKind kind = SurrogateKind::kClippedSte;
  double clip = 1.0;  // clipped_ste only; the polynomial is supported on [-1, 1]

  double derivative(double pre_activation) const;

  friend bool operator==(const SurrogateGradient&, const SurrogateGradient&) = default;
};

double surrogate_backward(double grad_out, double pre_activation, const SurrogateGradient& s);

struct TrainConfig {
  std::size_t batch_size = 512;
  double learning_rate = 0.02;
  std::size_t epochs = 1000;
  std::uint64_t seed = 0;

  OptimizerKind optimizer = OptimizerKind::kAdam;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double sgd_momentum = 0.0;

  SurrogateGradient surrogate;
  double bn_momentum = 0.1;
  double weight_init_scale = 0.1;

  // false replaces every Sign (weights and activations) by the identity.
  // Only meant for gradient checks of the real-valued layers.
  bool binarize = true;

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Published hyperparameters: 5 classes -> batch 512, lr 0.02; 17 classes ->
// batch 64, lr 0.002; 1000 epochs either way.
TrainConfig default_train_config(std::size_t n_classes);

// Adam moments (or SGD velocity in first_moment) for every trainable tensor,
// in params_visit order: per block weights, slope, gamma, beta.
struct OptimizerState {
  std::uint64_t step = 0;
  std::vector<std::vector<float>> first_moment;
  std::vector<std::vector<float>> second_moment;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

OptimizerState initial_optimizer_state(const TrainedParams& params);

// Sign of every sample (0 -> +1), packed as a (1, L) activation map.
BinaryTensor lp_quantize_input(std::span<const float> segment);

// [batch][channel][time] activations in double precision.
struct BatchTensor {
  std::size_t batch = 0;
  std::size_t channels = 0;
  std::size_t length = 0;
  std::vector<double> values;

  BatchTensor() = default;
  BatchTensor(std::size_t b, std::size_t c, std::size_t l, double fill = 0.0)
      : batch(b), channels(c), length(l), values(b * c * l, fill) {}

  double& at(std::size_t b, std::size_t c, std::size_t t) {
    return values[(b * channels + c) * length + t];
  }
  double at(std::size_t b, std::size_t c, std::size_t t) const {
    return values[(b * channels + c) * length + t];
  }
};

struct BatchNormCache {
  std::vector<double> mean;     // per channel, over (batch, time)
  std::vector<double> var;      // population variance
  std::vector<double> inv_std;  // 1 / sqrt(var + eps)
  BatchTensor normalized;
};

// Normalizes with batch statistics per channel over (batch, time).
BatchTensor batchnorm_train_forward(const BatchTensor& x, std::span<const float> gamma,
                                    std::span<const float> beta, double eps, BatchNormCache& cache);

// running <- (1 - momentum) * running + momentum * batch_stat
void update_running_stats(std::span<float> running_mean, std::span<float> running_var,
                          const BatchNormCache& cache, double momentum);

// Returns d(input); accumulates into dgamma / dbeta.
BatchTensor batchnorm_train_backward(const BatchTensor& grad_out, const BatchNormCache& cache,
                                     std::span<const float> gamma, std::span<double> dgamma,
                                     std::span<double> dbeta);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // softmax(logits) - one_hot(label)
};

// Log-sum-exp stabilised. Throws InvalidLabelError for label >= size.
LossAndGrad softmax_cross_entropy(std::span<const double> logits, std::size_t label);

struct Batch {
  std::size_t size = 0;
  std::size_t length = 0;
  std::vector<double> inputs;  // [size][length]
  std::vector<std::size_t> labels;
};

struct BlockGradients {
  std::vector<double> weights;
  std::vector<double> slope;
  std::vector<double> gamma;
  std::vector<double> beta;
};

struct Gradients {
  std::vector<BlockGradients> blocks;
};

struct StepResult {
  double loss = 0.0;  // mean over the batch
  std::size_t correct = 0;
  Gradients grads;
  std::vector<BatchNormCache> norm_stats;  // per block, for running-stat updates
};

// Training-mode forward (batch statistics) and backward pass. The surrogate
// gradient is applied at every Sign: on activations before each conv but the
// first, and on the latent weights. Does not modify `params`.
StepResult forward_backward(const TrainedParams& params, const NetConfig& cfg,
                            const TrainConfig& train_cfg, const Batch& batch);

// Adam or SGD update of weights, PReLU slopes, gamma and beta; latent
// weights are clamped to [-1, 1] afterwards.
void optimizer_step(TrainedParams& params, const Gradients& grads, OptimizerState& state,
                    const TrainConfig& train_cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double eval_accuracy = -1.0;  // -1 when no evaluation set was given

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

// Everything needed to continue a run bit-exactly.
struct TrainingState {
  NetConfig net;
  TrainConfig train;
  TrainedParams params;
  OptimizerState optimizer;
  std::string rng_state;  // std::mt19937_64 textual state
  std::size_t epoch = 0;  // completed epochs
  std::vector<EpochRecord> history;

  friend bool operator==(const TrainingState&, const TrainingState&) = default;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Single-threaded, deterministic for a fixed seed.
class Trainer {
 public:
  // Fresh run: parameters drawn from train_cfg.seed.
  Trainer(NetConfig net, TrainConfig train_cfg);
  explicit Trainer(TrainingState state);

  // One pass over `train` (seeded shuffle, mini-batches, optimizer steps and
  // running-stat updates), then accuracy on `eval` if given.
  EpochRecord run_epoch(const Dataset& train, const Dataset* eval);

  // Runs epochs until train_config().epochs are complete.
  void fit(const Dataset& train, const Dataset* eval, const EpochCallback& on_epoch = {});

  TrainingState state() const;
  const TrainedParams& params() const noexcept { return params_; }
  const NetConfig& net_config() const noexcept { return net_; }
  const TrainConfig& train_config() const noexcept { return train_; }
  void set_epochs(std::size_t epochs) { train_.epochs = epochs; }
  std::size_t completed_epochs() const noexcept { return epoch_; }
  const std::vector<EpochRecord>& history() const noexcept { return history_; }

 private:
  NetConfig net_;
  TrainConfig train_;
  TrainedParams params_;
  OptimizerState opt_;
  std::mt19937_64 rng_;
  std::size_t epoch_ = 0;
  std::vector<EpochRecord> history_;
};

struct FitResult {
  TrainedParams params;
  std::vector<EpochRecord> history;
};

// Convenience wrapper: trains from `initial` for train_cfg.epochs.
FitResult fit(const TrainedParams& initial, const Dataset& train, const Dataset* eval,
              const NetConfig& cfg, const TrainConfig& train_cfg, const EpochCallback& on_epoch = {});

// Inputs as the network sees them: BP keeps the samples, LP takes their sign.
Batch make_batch(const Dataset& data, std::span<const std::size_t> indices, Mode mode);

// Fraction of `data` classified correctly by the reference path.
double reference_accuracy(const TrainedParams& params, const NetConfig& cfg, const Dataset& data);

}  // namespace ecgbnn
