#include "ecgbnn/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ecgbnn/errors.hpp"
#include "ecgbnn/modelfile.hpp"

namespace ecgbnn {

using Json = nlohmann::ordered_json;

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t count) {
  if (truth >= n_ || predicted >= n_) {
    throw InvalidLabelError("confusion: class id " + std::to_string(std::max(truth, predicted)) +
                            " outside " + std::to_string(n_) + " classes");
  }
  counts_[truth * n_ + predicted] += count;
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.n_ != n_) throw DimensionError("confusion: merging matrices of different size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (std::uint64_t c : counts_) t += c;
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < n_; ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(std::span<const std::size_t> predictions,
                          std::span<const std::size_t> labels, std::size_t n_classes) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("confusion: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix m(n_classes);
  for (std::size_t i = 0; i < labels.size(); ++i) m.add(labels[i], predictions[i]);
  return m;
}

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricReport metric_report(const ConfusionMatrix& m) {
  const std::uint64_t total = m.total();
  if (total == 0) throw InvalidValueError("metric_report: empty confusion matrix");
  const std::size_t n = m.classes();
  MetricReport r;
  r.acc = static_cast<double>(m.trace()) / static_cast<double>(total);

  double sums[4] = {0, 0, 0, 0};
  std::size_t counts[4] = {0, 0, 0, 0};
  const char* names[4] = {"SEN", "SPE", "PRE", "F1"};
  for (std::size_t c = 0; c < n; ++c) {
    std::uint64_t tp = m.at(c, c);
    std::uint64_t fn = 0;
    std::uint64_t fp = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == c) continue;
      fn += m.at(c, j);
      fp += m.at(j, c);
    }
    const std::uint64_t tn = total - tp - fn - fp;
    ClassMetrics cm;
    cm.sen = ratio(tp, tp + fn);
    cm.spe = ratio(tn, tn + fp);
    cm.pre = ratio(tp, tp + fp);
    if (cm.sen && cm.pre && *cm.sen + *cm.pre > 0.0) {
      cm.f1 = 2.0 * *cm.pre * *cm.sen / (*cm.pre + *cm.sen);
    }
    const std::optional<double>* vals[4] = {&cm.sen, &cm.spe, &cm.pre, &cm.f1};
    for (int k = 0; k < 4; ++k) {
      if (vals[k]->has_value()) {
        sums[k] += **vals[k];
        ++counts[k];
      } else {
        r.undefined.push_back("class " + std::to_string(c) + ": " + names[k] + " undefined");
      }
    }
    r.per_class.push_back(cm);
  }
  auto mean = [&](int k) { return counts[k] == 0 ? 0.0 : sums[k] / static_cast<double>(counts[k]); };
  r.macro = {mean(0), mean(1), mean(2), mean(3)};
  return r;
}

StorageReport storage_report(const FusedModel& model) {
  const ModelLayout layout = model_layout(model);
  StorageReport s;
  std::size_t weights = 0;
  std::size_t channels = 0;
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    s.packed_weight_bits += layout.blocks[b].weight_bits;
    weights += layout.blocks[b].weight_bits;
    channels += model.config.blocks[b].out_channels;
  }
  s.threshold_bytes = layout.threshold_bytes();
  s.total_bytes = layout.payload_bytes();
  s.fp32_baseline_bytes = 4 * (weights + 5 * channels);
  s.compression_ratio =
      static_cast<double>(s.fp32_baseline_bytes) / static_cast<double>(s.total_bytes);
  return s;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt("%.4f", *v) : "n/a"; }

Json json_opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string pad_left(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

}  // namespace

std::string render_text(const ConfusionMatrix& m, const LabelScheme& labels) {
  std::ostringstream os;
  std::size_t w = 6;
  for (std::size_t c = 0; c < m.classes(); ++c) {
    w = std::max(w, labels.name(c).size() + 1);
    for (std::size_t j = 0; j < m.classes(); ++j) w = std::max(w, std::to_string(m.at(c, j)).size() + 1);
  }
  os << "confusion matrix (rows = true class, columns = predicted class)\n";
  os << pad_left("", w);
  for (std::size_t j = 0; j < m.classes(); ++j) os << pad_left(labels.name(j), w);
  os << '\n';
  for (std::size_t c = 0; c < m.classes(); ++c) {
    os << pad_left(labels.name(c), w);
    for (std::size_t j = 0; j < m.classes(); ++j) os << pad_left(std::to_string(m.at(c, j)), w);
    os << '\n';
  }
  return os.str();
}

std::string render_text(const MetricReport& r, const LabelScheme& labels) {
  std::ostringstream os;
  os << "ACC " << fmt("%.4f", r.acc) << '\n';
  std::size_t w = 7;
  for (std::size_t c = 0; c < r.per_class.size(); ++c) w = std::max(w, labels.name(c).size() + 1);
  os << pad_left("class", w) << pad_left("SEN", 9) << pad_left("SPE", 9) << pad_left("PRE", 9)
     << pad_left("F1", 9) << '\n';
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassMetrics& m = r.per_class[c];
    os << pad_left(labels.name(c), w) << pad_left(fmt_opt(m.sen), 9) << pad_left(fmt_opt(m.spe), 9)
       << pad_left(fmt_opt(m.pre), 9) << pad_left(fmt_opt(m.f1), 9) << '\n';
  }
  os << pad_left("macro", w) << pad_left(fmt("%.4f", r.macro.sen), 9)
     << pad_left(fmt("%.4f", r.macro.spe), 9) << pad_left(fmt("%.4f", r.macro.pre), 9)
     << pad_left(fmt("%.4f", r.macro.f1), 9) << '\n';
  for (const std::string& u : r.undefined) os << "note: " << u << " (excluded from macro)\n";
  return os.str();
}

std::string render_text(const StorageReport& r) {
  std::ostringstream os;
  os << "packed weights   " << r.packed_weight_bits << " bits (" << (r.packed_weight_bits + 7) / 8
     << " bytes)\n";
  os << "thresholds       " << r.threshold_bytes << " bytes\n";
  os << "total            " << r.total_bytes << " bytes (" << fmt("%.2f", r.total_bytes / 1024.0)
     << " KB)\n";
  os << "fp32 baseline    " << r.fp32_baseline_bytes << " bytes\n";
  os << "compression      " << fmt("%.2f", r.compression_ratio) << "x\n";
  return os.str();
}

std::string to_json(const ConfusionMatrix& m) {
  Json rows = Json::array();
  for (std::size_t c = 0; c < m.classes(); ++c) {
    Json row = Json::array();
    for (std::size_t j = 0; j < m.classes(); ++j) row.push_back(m.at(c, j));
    rows.push_back(std::move(row));
  }
  return Json{{"classes", m.classes()}, {"counts", rows}}.dump();
}

std::string to_json(const MetricReport& r) {
  Json per = Json::array();
  for (const ClassMetrics& m : r.per_class) {
    per.push_back(
        {{"sen", json_opt(m.sen)}, {"spe", json_opt(m.spe)}, {"pre", json_opt(m.pre)}, {"f1", json_opt(m.f1)}});
  }
  Json doc;
  doc["acc"] = r.acc;
  doc["sen"] = r.macro.sen;
  doc["spe"] = r.macro.spe;
  doc["pre"] = r.macro.pre;
  doc["f1"] = r.macro.f1;
  doc["per_class"] = per;
  doc["undefined"] = r.undefined;
  return doc.dump();
}

std::string to_json(const StorageReport& r) {
  return Json{{"packed_weight_bits", r.packed_weight_bits},
              {"threshold_bytes", r.threshold_bytes},
              {"total_bytes", r.total_bytes},
              {"fp32_baseline_bytes", r.fp32_baseline_bytes},
              {"compression_ratio", r.compression_ratio}}
      .dump();
}

}  // namespace ecgbnn
