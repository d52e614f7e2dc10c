#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <vector>

#include <nlohmann/json.hpp>

#include "ecgbnn/errors.hpp"
#include "ecgbnn/metrics.hpp"
#include "ecgbnn/model.hpp"
#include "ecgbnn/modelfile.hpp"
#include "support/oracles.hpp"

using namespace ecgbnn;

namespace {

ConfusionMatrix binary_example() {
  ConfusionMatrix m(2);
  m.add(0, 0, 50);
  m.add(0, 1, 10);
  m.add(1, 0, 5);
  m.add(1, 1, 35);
  return m;
}

std::size_t weight_count(const NetConfig& cfg) {
  std::size_t n = 0;
  for (const BlockConfig& b : cfg.blocks) n += b.in_channels * b.out_channels * b.conv.taps;
  return n;
}

std::size_t channel_count(const NetConfig& cfg) {
  std::size_t n = 0;
  for (const BlockConfig& b : cfg.blocks) n += b.out_channels;
  return n;
}

}  // namespace

TEST(Confusion, BuildFromPredictions) {
  const std::vector<std::size_t> preds = {0, 1, 1, 2};
  const std::vector<std::size_t> labels = {0, 1, 2, 2};
  const ConfusionMatrix m = confusion(preds, labels, 3);
  EXPECT_EQ(m.at(0, 0), 1U);
  EXPECT_EQ(m.at(2, 1), 1U);
  EXPECT_EQ(m.at(2, 2), 1U);
  EXPECT_EQ(m.total(), 4U);
  EXPECT_EQ(m.trace(), 3U);
}

TEST(Confusion, Errors) {
  const std::vector<std::size_t> two = {0, 1};
  const std::vector<std::size_t> one = {0};
  EXPECT_THROW(confusion(two, one, 2), DimensionError);
  const std::vector<std::size_t> bad = {0, 3};
  EXPECT_THROW(confusion(bad, two, 3), InvalidLabelError);
  ConfusionMatrix m(2);
  EXPECT_THROW(m.merge(ConfusionMatrix(3)), DimensionError);
}

TEST(Confusion, MergeAddsShards) {
  ConfusionMatrix a(2);
  a.add(0, 1);
  ConfusionMatrix b(2);
  b.add(0, 1, 2);
  b.add(1, 1);
  a.merge(b);
  EXPECT_EQ(a.at(0, 1), 3U);
  EXPECT_EQ(a.at(1, 1), 1U);
}

TEST(MetricReport, BinaryHandExample) {
  const MetricReport r = metric_report(binary_example());
  EXPECT_NEAR(r.acc, 0.85, 1e-12);
  EXPECT_NEAR(*r.per_class[0].sen, 50.0 / 60.0, 1e-12);
  EXPECT_NEAR(*r.per_class[1].sen, 35.0 / 40.0, 1e-12);
  EXPECT_NEAR(*r.per_class[0].spe, 35.0 / 40.0, 1e-12);
  EXPECT_NEAR(*r.per_class[0].pre, 50.0 / 55.0, 1e-12);
  EXPECT_NEAR(*r.per_class[1].pre, 35.0 / 45.0, 1e-12);
  EXPECT_NEAR(r.macro.sen, 0.8541666, 1e-6);
  const double p0 = 50.0 / 55.0;
  const double s0 = 50.0 / 60.0;
  EXPECT_NEAR(*r.per_class[0].f1, 2 * p0 * s0 / (p0 + s0), 1e-12);
  EXPECT_TRUE(r.undefined.empty());
}

TEST(MetricReport, DiagonalIsPerfect) {
  ConfusionMatrix m(4);
  for (std::size_t c = 0; c < 4; ++c) m.add(c, c, c + 1);
  const MetricReport r = metric_report(m);
  EXPECT_DOUBLE_EQ(r.acc, 1.0);
  EXPECT_DOUBLE_EQ(r.macro.sen, 1.0);
  EXPECT_DOUBLE_EQ(r.macro.spe, 1.0);
  EXPECT_DOUBLE_EQ(r.macro.pre, 1.0);
  EXPECT_DOUBLE_EQ(r.macro.f1, 1.0);
}

TEST(MetricReport, NeverPredictedClassHasUndefinedPrecision) {
  ConfusionMatrix m(3);
  m.add(0, 0, 5);
  m.add(1, 1, 5);
  m.add(2, 0, 2);
  const MetricReport r = metric_report(m);
  EXPECT_FALSE(r.per_class[2].pre.has_value());
  EXPECT_FALSE(r.per_class[2].f1.has_value());
  EXPECT_DOUBLE_EQ(*r.per_class[2].sen, 0.0);
  EXPECT_FALSE(r.undefined.empty());
  // Macro precision averages the two defined classes only.
  EXPECT_NEAR(r.macro.pre, (5.0 / 7.0 + 1.0) / 2.0, 1e-12);
}

TEST(MetricReport, EmptyMatrixThrows) {
  EXPECT_THROW(metric_report(ConfusionMatrix(3)), InvalidValueError);
}

TEST(MetricReportProperty, InvariantUnderClassRelabeling) {
  oracle::Gen g(71);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = g.index(2, 8);
    ConfusionMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) m.add(i, j, static_cast<std::uint64_t>(g.integer(0, 30)));
    }
    m.add(0, 0);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), g.engine());
    ConfusionMatrix p(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) p.add(perm[i], perm[j], m.at(i, j));
    }
    const MetricReport a = metric_report(m);
    const MetricReport b = metric_report(p);
    EXPECT_NEAR(a.acc, b.acc, 1e-12);
    EXPECT_NEAR(a.macro.sen, b.macro.sen, 1e-12);
    EXPECT_NEAR(a.macro.spe, b.macro.spe, 1e-12);
    EXPECT_NEAR(a.macro.pre, b.macro.pre, 1e-12);
    EXPECT_NEAR(a.macro.f1, b.macro.f1, 1e-12);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(a.per_class[i].sen, b.per_class[perm[i]].sen);
    }
  }
}

TEST(Storage, DefaultWeightBits) {
  oracle::Gen g(72);
  const NetConfig five = build_default_config(5, Mode::kBP);
  const StorageReport r5 = storage_report(fuse(oracle::random_params(five, g), five));
  EXPECT_EQ(r5.packed_weight_bits, 28280U);
  EXPECT_EQ(model_layout(fuse(oracle::random_params(five, g), five)).weight_bytes(), 3535U);
  EXPECT_EQ(r5.fp32_baseline_bytes, 4 * (weight_count(five) + 5 * channel_count(five)));

  const NetConfig seventeen = build_default_config(17, Mode::kLP);
  const FusedModel m17 = fuse(oracle::random_params(seventeen, g), seventeen);
  EXPECT_EQ(storage_report(m17).packed_weight_bits, 33656U);
  EXPECT_EQ(model_layout(m17).weight_bytes(), 4207U);
}

TEST(Storage, RatioIsBaselineOverTotal) {
  oracle::Gen g(73);
  const NetConfig cfg = build_default_config(5, Mode::kBP);
  const FusedModel m = fuse(oracle::random_params(cfg, g), cfg);
  const StorageReport r = storage_report(m);
  const ModelLayout layout = model_layout(m);
  EXPECT_EQ(r.total_bytes, layout.payload_bytes());
  EXPECT_EQ(r.threshold_bytes, layout.threshold_bytes());
  EXPECT_DOUBLE_EQ(r.compression_ratio,
                   static_cast<double>(r.fp32_baseline_bytes) / static_cast<double>(r.total_bytes));
  EXPECT_LE(r.total_bytes, 4096U);
  EXPECT_GE(r.compression_ratio, 25.0);
}

TEST(Json, ReportsParseWithNullForUndefined) {
  ConfusionMatrix m(3);
  m.add(0, 0, 5);
  m.add(1, 1, 5);
  m.add(2, 0, 2);
  const auto doc = nlohmann::json::parse(to_json(metric_report(m)));
  for (const char* key : {"acc", "sen", "spe", "pre", "f1", "per_class", "undefined"}) {
    EXPECT_TRUE(doc.contains(key)) << key;
  }
  EXPECT_TRUE(doc["per_class"][2]["pre"].is_null());
  EXPECT_NO_THROW(nlohmann::json::parse(to_json(m)));

  oracle::Gen g(74);
  const NetConfig cfg = build_default_config(5, Mode::kBP);
  const FusedModel model = fuse(oracle::random_params(cfg, g), cfg);
  const auto storage = nlohmann::json::parse(to_json(storage_report(model)));
  EXPECT_EQ(storage["packed_weight_bits"], 28280);
}

TEST(Render, TextMentionsClassNames) {
  const std::string text = render_text(metric_report(binary_example()), LabelScheme::custom(2));
  EXPECT_NE(text.find("0.85"), std::string::npos);
  const ConfusionMatrix m5(5);
  EXPECT_NE(render_text(m5, LabelScheme::aami5()).find("V"), std::string::npos);
}
