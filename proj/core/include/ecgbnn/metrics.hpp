#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ecgbnn/data.hpp"
#include "ecgbnn/model.hpp"

namespace ecgbnn {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t n_classes)
      : n_(n_classes), counts_(n_classes * n_classes, 0) {}

  std::size_t classes() const noexcept { return n_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_ + predicted];
  }
  // Throws InvalidLabelError for out-of-range ids.
  void add(std::size_t truth, std::size_t predicted, std::uint64_t count = 1);
  // Shard merge. Throws DimensionError on a class-count mismatch.
  void merge(const ConfusionMatrix& other);

  std::uint64_t total() const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> counts_;
};

// Throws DimensionError on unequal lengths, InvalidLabelError for ids >= C.
ConfusionMatrix confusion(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> labels, std::size_t n_classes);

// One-vs-rest metrics of one class. Empty when the denominator is zero.
struct ClassMetrics {
  std::optional<double> sen;
  std::optional<double> spe;
  std::optional<double> pre;
  std::optional<double> f1;
};

struct MacroMetrics {
  double sen = 0.0;
  double spe = 0.0;
  double pre = 0.0;
  double f1 = 0.0;
};

struct MetricReport {
  double acc = 0.0;
  std::vector<ClassMetrics> per_class;
  MacroMetrics macro;  // unweighted means over classes where the metric is defined
  // "class <c>: <metric> undefined" for every excluded entry.
  std::vector<std::string> undefined;
};

// Throws InvalidValueError when the matrix is empty.
MetricReport metric_report(const ConfusionMatrix& m);

struct StorageReport {
  std::size_t packed_weight_bits = 0;
  std::size_t threshold_bytes = 0;
  std::size_t total_bytes = 0;  // weight + threshold sections of the model file
  std::size_t fp32_baseline_bytes = 0;
  double compression_ratio = 0.0;
};

// The baseline stores every latent weight and the five per-channel values
// (gamma, beta, mean, var, PReLU a) as 32-bit floats.
StorageReport storage_report(const FusedModel& model);

std::string render_text(const ConfusionMatrix& m, const LabelScheme& labels);
std::string render_text(const MetricReport& r, const LabelScheme& labels);
std::string render_text(const StorageReport& r);

// JSON documents (UTF-8). Undefined metrics are null.
std::string to_json(const ConfusionMatrix& m);
std::string to_json(const MetricReport& r);
std::string to_json(const StorageReport& r);

}  // namespace ecgbnn
