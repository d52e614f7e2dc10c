// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "ecgbnn/bintensor.hpp"
#include "ecgbnn/data.hpp"
#include "ecgbnn/errors.hpp"
#include "ecgbnn/fusion.hpp"
#include "ecgbnn/metrics.hpp"
#include "ecgbnn/model.hpp"
#include "ecgbnn/modelfile.hpp"
#include "ecgbnn/ops.hpp"
#include "ecgbnn/train.hpp"
#include "support/oracles.hpp"

using namespace ecgbnn;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kToySeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / ("ecgbnn_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// 1. Fused thresholds agree with sign(BN(PReLU(x))) on every popcount value.
Outcome fusion_soundness() {
  constexpr std::int32_t kBound = 448;
  constexpr int kTuples = 10000;
  oracle::Gen g(20240101);
  std::size_t mismatches = 0;
  std::size_t points = 0;
  std::size_t failures = 0;
  for (int i = 0; i < kTuples; ++i) {
    UnfusedChannel ch;
    ch.gamma = g.signed_log(1e-3, 1e3);
    ch.beta = g.signed_log(1e-3, 1e3);
    ch.mean = g.signed_log(1e-3, 1e3);
    ch.var = std::exp(g.uniform(std::log(1e-3), std::log(1e3)));
    ch.eps = 1e-5;
    ch.slope = g.coin(0.3) ? g.signed_log(1e-3, 1e3) : g.uniform(-1.0, 1.0);
    switch (i % 10) {
      case 0: ch.gamma = 0.0; break;
      case 1: ch.slope = 0.0; break;
      case 2: ch.slope = -g.uniform(1e-3, 10.0); break;
      case 3: {
        // Boundary exactly on an integer: k = gamma, b = -gamma * n.
        ch.eps = 0.0;
        ch.var = 1.0;
        ch.mean = 0.0;
        ch.gamma = static_cast<double>(g.integer(1, 64)) * (g.coin() ? 0.5 : -0.5);
        ch.beta = -ch.gamma * static_cast<double>(g.integer(-kBound, kBound));
        break;
      }
      case 4: {
        // Integral boundary through the mean: (x - mu) = 0 at an integer.
        ch.mean = static_cast<double>(g.integer(-kBound, kBound));
        ch.beta = 0.0;
        break;
      }
      default: break;
    }
    FusedChannelParams fused;
    try {
      fused = fuse_channel(ch, true, IntegerDomain{kBound});
    } catch (const Error&) {
      ++failures;
      continue;
    }
    const auto& th = std::get<IntThresholdChannel>(fused);
    for (std::int32_t x = -kBound; x <= kBound; ++x) {
      ++points;
      const int want = oracle::composed_sign(x, ch.gamma, ch.beta, ch.mean, ch.var, ch.eps, ch.slope);
      if (fused_activation(x, th) != want) ++mismatches;
    }
  }
  return {mismatches == 0 && failures == 0,
          std::to_string(kTuples) + " tuples, " + std::to_string(points) + " points, " +
              std::to_string(mismatches) + " mismatches, " + std::to_string(failures) +
              " fusion errors"};
}

// 2. XNOR-POPCOUNT convolution equals the +1/-1 float convolution.
Outcome kernel_exactness() {
  constexpr int kShapes = 1000;
  const std::size_t table_in[] = {1, 8, 16, 32, 32, 64};
  const std::size_t table_out[] = {8, 16, 32, 32, 64, 5};
  oracle::Gen g(77);
  std::size_t mismatches = 0;
  std::size_t outputs = 0;
  for (int i = 0; i < kShapes; ++i) {
    std::size_t cin = 0;
    std::size_t cout = 0;
    ConvSpec spec;
    std::size_t len = 0;
    if (i % 4 == 0) {
      const std::size_t row = g.index(0, 5);
      cin = table_in[row];
      cout = table_out[row];
      spec = {7, row == 0 ? 2U : 1U, 5, 1.0F};
      len = g.index(1, 400);
    } else {
      cin = g.index(1, 70);
      cout = g.index(1, 9);
      spec.taps = g.index(1, 9);
      spec.stride = g.index(1, 3);
      spec.padding = g.index(0, 6);
      spec.pad_value = g.coin() ? 1.0F : -1.0F;
      const std::size_t min_len = spec.taps > 2 * spec.padding ? spec.taps - 2 * spec.padding : 1;
      len = g.index(min_len, min_len + 150);
    }
    BinaryTensor x = BinaryTensor::activations(cin, len);
    BinaryTensor w = BinaryTensor::weights(cout, cin, spec.taps);
    oracle::Signal xs(cin, std::vector<double>(len));
    oracle::Kernel ws(cout, oracle::Signal(cin, std::vector<double>(spec.taps)));
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t t = 0; t < len; ++t) {
        const int v = g.pm1();
        x.set(c, t, v);
        xs[c][t] = v;
      }
    }
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t k = 0; k < spec.taps; ++k) {
          const int v = g.pm1();
          w.set(o, c, k, v);
          ws[o][c][k] = v;
        }
      }
    }
    const IntFeatureMap got = binary_conv1d(x, w, spec);
    const oracle::Signal want = oracle::conv1d(xs, ws, spec.stride, spec.padding, spec.pad_value);
    for (std::size_t o = 0; o < cout; ++o) {
      if (want[o].size() != got.length) {
        ++mismatches;
        continue;
      }
      for (std::size_t t = 0; t < got.length; ++t) {
        ++outputs;
        if (static_cast<double>(got.at(o, t)) != want[o][t]) ++mismatches;
      }
    }
  }
  return {mismatches == 0, std::to_string(kShapes) + " shapes, " + std::to_string(outputs) +
                               " outputs, " + std::to_string(mismatches) + " mismatches"};
}

// 3. Fused deployment path and real-arithmetic reference agree.
Outcome cross_path() {
  constexpr int kPairs = 1000;
  oracle::Gen g(31337);
  std::size_t label_mismatch = 0;
  std::size_t map_mismatch = 0;
  std::size_t maps = 0;
  std::size_t errors = 0;
  for (int i = 0; i < kPairs; ++i) {
    const Mode mode = i % 2 == 0 ? Mode::kBP : Mode::kLP;
    const std::size_t classes = g.coin(0.7) ? 5 : 17;
    const std::size_t length = i % 20 == 0 ? 3600 : g.index(360, 900);
    const NetConfig cfg = build_default_config(classes, mode, length);
    const TrainedParams params = oracle::random_params(cfg, g);
    RealFeatureMap input(1, length);
    for (float& v : input.values) v = static_cast<float>(g.normal());
    try {
      const FusedModel model = fuse(params, cfg);
      ForwardTrace ref_trace;
      ForwardTrace fused_trace;
      const Prediction ref = forward_reference(params, cfg, input, &ref_trace);
      const Prediction got = mode == Mode::kBP
                                 ? forward_fused(model, input, &fused_trace)
                                 : forward_fused(model, lp_quantize_input(input.values), &fused_trace);
      if (ref.label != got.label) ++label_mismatch;
      if (ref_trace.activations.size() != fused_trace.activations.size()) {
        ++map_mismatch;
        continue;
      }
      for (std::size_t b = 0; b < ref_trace.activations.size(); ++b) {
        ++maps;
        if (!(ref_trace.activations[b] == fused_trace.activations[b])) ++map_mismatch;
      }
    } catch (const Error&) {
      ++errors;
    }
  }
  return {label_mismatch == 0 && map_mismatch == 0 && errors == 0,
          std::to_string(kPairs) + " pairs (BP+LP, 5/17 classes), " + std::to_string(maps) +
              " +/-1 maps, " + std::to_string(label_mismatch) + " class mismatches, " +
              std::to_string(map_mismatch) + " map mismatches, " + std::to_string(errors) + " errors"};
}

// 4. Per-block (conv, pool) lengths for a 3600-sample input.
Outcome shape_pipeline() {
  const std::vector<std::pair<std::size_t, std::size_t>> expected = {
      {1802, 898}, {902, 448}, {452, 223}, {227, 111}, {115, 55}, {59, 27}};
  const auto recurrence = oracle::shapes(3600, {2, 1, 1, 1, 1, 1}, 7, 5, 7, 2);
  bool ok = recurrence == expected;
  std::string got;
  for (Mode mode : {Mode::kBP, Mode::kLP}) {
    for (std::size_t classes : {5U, 17U}) {
      const std::vector<BlockShape> shapes = build_default_config(classes, mode).shapes();
      got.clear();
      for (std::size_t b = 0; b < shapes.size(); ++b) {
        ok = ok && b < expected.size() && shapes[b].conv_length == expected[b].first &&
             shapes[b].pool_length == expected[b].second;
        got += "(" + std::to_string(shapes[b].conv_length) + "," +
               std::to_string(shapes[b].pool_length) + ")";
      }
      ok = ok && shapes.size() == expected.size();
    }
  }
  return {ok, got};
}

// 5. Storage accounting of the default models.
Outcome storage() {
  oracle::Gen g(5150);
  bool ok = true;
  std::string detail;
  for (std::size_t classes : {5U, 17U}) {
    const std::size_t want_bits = classes == 5 ? 28280 : 33656;
    const std::size_t want_weight_bytes = classes == 5 ? 3535 : 4207;
    const std::size_t limit = classes == 5 ? 4096 : 4800;
    std::size_t worst_total = 0;
    double worst_ratio = 1e300;
    for (int trial = 0; trial < 20; ++trial) {
      const NetConfig cfg = build_default_config(classes, trial % 2 == 0 ? Mode::kBP : Mode::kLP);
      const FusedModel model = fuse(oracle::random_params(cfg, g), cfg);
      const StorageReport r = storage_report(model);
      const ModelLayout layout = model_layout(model);
      const std::vector<std::uint8_t> bytes = serialize_model(model);
      ok = ok && r.packed_weight_bits == want_bits && layout.weight_bytes() == want_weight_bytes &&
           bytes.size() == layout.header_bytes + r.total_bytes + layout.crc_bytes &&
           r.total_bytes <= limit && r.compression_ratio >= 25.0;
      worst_total = std::max(worst_total, r.total_bytes);
      worst_ratio = std::min(worst_ratio, r.compression_ratio);
    }
    detail += std::to_string(classes) + "-class: " + std::to_string(want_bits) + " weight bits, max " +
              std::to_string(worst_total) + " B <= " + std::to_string(limit) + ", min ratio " +
              fmt("%.2f", worst_ratio) + "x; ";
  }
  return {ok, detail};
}

// 6. Analytic gradients against central finite differences (Sign disabled).
// Finite differences are only meaningful where the loss is smooth over the
// whole step, so the check first confirms with an independent forward pass
// that no perturbation moves a max-pool winner or a PReLU piece.
Outcome gradient_fidelity() {
  NetConfig cfg;
  cfg.mode = Mode::kBP;
  cfg.n_classes = 3;
  cfg.input_length = 16;
  BlockConfig b1;
  b1.in_channels = 1;
  b1.out_channels = 4;
  b1.conv = {3, 1, 1, 1.0F};
  b1.pool_size = 2;
  b1.pool_stride = 2;
  BlockConfig b2;
  b2.in_channels = 4;
  b2.out_channels = 3;
  b2.conv = {3, 1, 1, 1.0F};
  b2.pool_size = 2;
  b2.pool_stride = 2;
  cfg.blocks = {b1, b2};

  oracle::Gen g(kToySeed);
  TrainedParams p;
  for (const BlockConfig& b : cfg.blocks) {
    BlockParams bp;
    bp.in_channels = b.in_channels;
    bp.out_channels = b.out_channels;
    bp.taps = b.conv.taps;
    for (std::size_t i = 0; i < b.out_channels * b.in_channels * b.conv.taps; ++i) {
      bp.weights.push_back(static_cast<float>(g.uniform(-0.8, 0.8)));
    }
    for (std::size_t c = 0; c < b.out_channels; ++c) {
      bp.slope.push_back(static_cast<float>(g.uniform(0.1, 0.4)));
      bp.gamma.push_back(static_cast<float>(g.uniform(0.5, 1.5)));
      bp.beta.push_back(static_cast<float>(g.uniform(-0.3, 0.3)));
      bp.running_mean.push_back(0.0F);
      bp.running_var.push_back(1.0F);
    }
    p.blocks.push_back(bp);
  }
  Batch batch;
  batch.size = 4;
  batch.length = cfg.input_length;
  for (std::size_t i = 0; i < batch.size * batch.length; ++i) batch.inputs.push_back(g.normal());
  for (std::size_t i = 0; i < batch.size; ++i) batch.labels.push_back(i % cfg.n_classes);

  TrainConfig tc;
  tc.binarize = false;
  const StepResult analytic = forward_backward(p, cfg, tc, batch);
  const oracle::TrainForward base = oracle::train_forward(p, cfg, batch.inputs, batch.labels);
  const double loss_gap = std::abs(base.loss - analytic.loss) / std::max(1.0, std::abs(base.loss));

  constexpr double kStep = 1e-3;
  constexpr double kTol = 1e-4;
  std::size_t checked = 0;
  std::size_t bad = 0;
  std::size_t kinks = 0;
  double worst = 0.0;
  auto check = [&](std::vector<float>& values, const std::vector<double>& grads) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      const float orig = values[i];
      const float up = static_cast<float>(orig + kStep);
      const float down = static_cast<float>(orig - kStep);
      values[i] = up;
      const double lp = forward_backward(p, cfg, tc, batch).loss;
      const bool smooth_up =
          oracle::train_forward(p, cfg, batch.inputs, batch.labels).pattern == base.pattern;
      values[i] = down;
      const double lm = forward_backward(p, cfg, tc, batch).loss;
      const bool smooth_down =
          oracle::train_forward(p, cfg, batch.inputs, batch.labels).pattern == base.pattern;
      values[i] = orig;
      if (!smooth_up || !smooth_down) ++kinks;
      const double numeric = (lp - lm) / (static_cast<double>(up) - static_cast<double>(down));
      const double scale = std::max({std::abs(numeric), std::abs(grads[i]), 1e-2});
      const double rel = std::abs(numeric - grads[i]) / scale;
      worst = std::max(worst, rel);
      ++checked;
      if (rel > kTol) ++bad;
    }
  };
  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const BlockGradients& gr = analytic.grads.blocks[b];
    check(p.blocks[b].weights, gr.weights);
    check(p.blocks[b].slope, gr.slope);
    check(p.blocks[b].gamma, gr.gamma);
    check(p.blocks[b].beta, gr.beta);
  }
  return {bad == 0 && kinks == 0 && loss_gap < 1e-12,
          std::to_string(checked) + " parameters, worst relative error " + fmt("%.2e", worst) +
              " (tolerance 1e-4, step 1e-3), " + std::to_string(kinks) +
              " steps crossing a kink, loss vs oracle " + fmt("%.1e", loss_gap)};
}

// 7. Desk-scale training on the synthetic 5-class set.
Outcome desk_training() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset data = standardized(synth_dataset(LabelScheme::aami5(), 200, 360, 0.1, 7));
  const Split parts = split(data, 0.8, 7);
  const NetConfig net = build_default_config(5, Mode::kBP, 360);
  TrainConfig tc;
  tc.batch_size = 32;
  tc.learning_rate = 0.01;
  tc.seed = 7;
  tc.epochs = 100;

  Trainer first(net, tc);
  double best = 0.0;
  std::size_t reached = 0;
  while (first.completed_epochs() < 100) {
    const EpochRecord r = first.run_epoch(parts.train, &parts.test);
    best = std::max(best, r.eval_accuracy);
    if (r.eval_accuracy >= 0.90) {
      reached = r.epoch;
      break;
    }
  }
  const double acc = first.history().back().eval_accuracy;

  Trainer second(net, tc);
  for (std::size_t e = 0; e < first.completed_epochs(); ++e) second.run_epoch(parts.train, &parts.test);
  const bool deterministic = second.state() == first.state();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {reached != 0 && deterministic,
          "test accuracy " + fmt("%.4f", acc) + " at epoch " + std::to_string(first.completed_epochs()) +
              " (batch 32, lr 0.01, seed 7), rerun " +
              (deterministic ? "bit-identical" : "DIFFERS") + ", " + fmt("%.1f", secs) + " s"};
}

// 8. Two identical train invocations give identical files and histories.
Outcome cli_determinism() {
  const fs::path dir = scratch_dir() / "determinism";
  fs::create_directories(dir);
  const fs::path data = dir / "synth.csv";
  save_csv(synth_dataset(LabelScheme::aami5(), 30, 360, 0.1, 11), data);
  std::vector<std::string> outputs;
  std::vector<std::vector<std::uint8_t>> models;
  std::vector<std::vector<std::uint8_t>> checkpoints;
  for (int run = 0; run < 2; ++run) {
    const fs::path model = dir / ("run" + std::to_string(run) + ".becg");
    std::ostringstream out;
    std::ostringstream err;
    const int rc = cli::run({"train", "--data", data.string(), "--classes", "5", "--epochs", "4",
                             "--batch-size", "16", "--lr", "0.01", "--seed", "7", "--out",
                             model.string()},
                            out, err);
    if (rc != 0) return {false, "train exited with " + std::to_string(rc) + ": " + err.str()};
    outputs.push_back(out.str());
    models.push_back(slurp(model));
    checkpoints.push_back(slurp(model.string() + ".ckpt"));
  }
  const bool same_model = models[0] == models[1] && !models[0].empty();
  const bool same_ckpt = checkpoints[0] == checkpoints[1];
  const bool same_history = outputs[0] == outputs[1] && outputs[0].find("epoch 4") != std::string::npos;
  return {same_model && same_ckpt && same_history,
          std::string("model files ") + (same_model ? "identical" : "DIFFER") + " (" +
              std::to_string(models[0].size()) + " B), checkpoints " +
              (same_ckpt ? "identical" : "DIFFER") + ", epoch histories " +
              (same_history ? "identical" : "DIFFER")};
}

// 9. Published accuracy needs the MIT-BIH-derived segment sets, which are not
// part of the build. Point ECGBNN_REFERENCE_DATA at a converted set (with
// ECGBNN_REFERENCE_CLASSES=5|17 and optionally ECGBNN_REFERENCE_MODE=bp|lp)
// to run the full default-hyperparameter training and compare. Without the
// data the criterion is reported unmeasured and fails.
Outcome full_scale() {
  const TrainConfig five = default_train_config(5);
  const TrainConfig seventeen = default_train_config(17);
  const bool defaults = five.batch_size == 512 && five.learning_rate == 0.02 &&
                        five.epochs == 1000 && seventeen.batch_size == 64 &&
                        seventeen.learning_rate == 0.002 && seventeen.epochs == 1000;
  const char* data = std::getenv("ECGBNN_REFERENCE_DATA");
  if (data == nullptr || *data == '\0') {
    return {false, std::string("not measured: set ECGBNN_REFERENCE_DATA to a converted MIT-BIH "
                               "segment set (see README); defaults 512/0.02 and 64/0.002 x 1000 "
                               "epochs ") + (defaults ? "wired" : "WRONG")};
  }
  const char* classes_env = std::getenv("ECGBNN_REFERENCE_CLASSES");
  const char* mode_env = std::getenv("ECGBNN_REFERENCE_MODE");
  const std::string classes = classes_env != nullptr ? classes_env : "5";
  const std::string mode = mode_env != nullptr ? mode_env : "bp";
  double target = 0.0;
  if (classes == "5") target = mode == "lp" ? 0.915 : 0.969;
  if (classes == "17") target = mode == "lp" ? 0.920 : 0.975;
  if (target == 0.0 || (mode != "bp" && mode != "lp")) {
    return {false, "unsupported ECGBNN_REFERENCE_CLASSES/MODE " + classes + "/" + mode};
  }
  const fs::path dir = scratch_dir() / "reference";
  fs::create_directories(dir);
  std::ostringstream out;
  std::ostringstream err;
  const int rc = cli::run({"train", "--data", data, "--classes", classes, "--mode", mode,
                           "--out", (dir / "reference.becg").string(), "--json"},
                          out, err);
  if (rc != 0) return {false, "train exited with " + std::to_string(rc) + ": " + err.str()};
  const nlohmann::json report = nlohmann::json::parse(out.str());
  const double acc = report.at("metrics").at("acc").get<double>();
  constexpr double kBand = 0.015;
  return {defaults && std::abs(acc - target) <= kBand,
          classes + "-class " + mode + ": test accuracy " + fmt("%.4f", acc) + " vs " +
              fmt("%.4f", target) + " +/- " + fmt("%.3f", kBand)};
}

// 10. Round trips, resume and corruption detection.
Outcome serialization() {
  oracle::Gen g(1010);
  bool ok = true;
  std::string detail;

  const NetConfig cfg = build_default_config(5, Mode::kBP);
  const TrainedParams params = oracle::random_params(cfg, g);
  const FusedModel model = fuse(params, cfg);
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  const FusedModel loaded = deserialize_model(bytes);
  const bool model_rt = loaded == model && serialize_model(loaded) == bytes;
  ok = ok && model_rt;

  std::size_t corrupt_missed = 0;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    std::vector<std::uint8_t> bad = bytes;
    bad[i] ^= static_cast<std::uint8_t>(g.integer(1, 255));
    try {
      deserialize_model(bad);
      ++corrupt_missed;
    } catch (const FormatError&) {
    }
  }
  ok = ok && corrupt_missed == 0;

  // Resume: 2 + 2 epochs through a checkpoint against 4 uninterrupted.
  const Dataset data = standardized(synth_dataset(LabelScheme::aami5(), 24, 360, 0.1, 3));
  const Split parts = split(data, 0.8, 3);
  const NetConfig net = build_default_config(5, Mode::kBP, 360);
  TrainConfig tc;
  tc.batch_size = 16;
  tc.learning_rate = 0.01;
  tc.seed = 3;
  tc.epochs = 4;
  Trainer straight(net, tc);
  straight.fit(parts.train, &parts.test);

  Trainer half(net, tc);
  half.set_epochs(2);
  half.fit(parts.train, &parts.test);
  const std::vector<std::uint8_t> ckpt = serialize_checkpoint(half.state());
  const TrainingState restored = deserialize_checkpoint(ckpt);
  const bool ckpt_rt = restored == half.state() && serialize_checkpoint(restored) == ckpt;
  Trainer resumed(restored);
  resumed.set_epochs(4);
  resumed.fit(parts.train, &parts.test);
  TrainingState a = straight.state();
  TrainingState b = resumed.state();
  const bool resume_ok = a == b;
  ok = ok && ckpt_rt && resume_ok;

  std::size_t ckpt_missed = 0;
  std::size_t ckpt_probes = 0;
  for (std::size_t i = 0; i < ckpt.size(); i += 1 + ckpt.size() / 3000) {
    std::vector<std::uint8_t> bad = ckpt;
    bad[i] ^= static_cast<std::uint8_t>(g.integer(1, 255));
    ++ckpt_probes;
    try {
      deserialize_checkpoint(bad);
      ++ckpt_missed;
    } catch (const FormatError&) {
    }
  }
  ok = ok && ckpt_missed == 0;

  detail = std::string("model round trip ") + (model_rt ? "exact" : "BROKEN") + ", " +
           std::to_string(bytes.size()) + " single-byte corruptions, " +
           std::to_string(corrupt_missed) + " missed; checkpoint round trip " +
           (ckpt_rt ? "exact" : "BROKEN") + ", resume 2+2 vs 4 epochs " +
           (resume_ok ? "bit-identical" : "DIFFERS") + ", " + std::to_string(ckpt_probes) +
           " checkpoint corruptions, " + std::to_string(ckpt_missed) + " missed";
  return {ok, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "fusion soundness", fusion_soundness},
      {2, "kernel exactness", kernel_exactness},
      {3, "cross-path equivalence", cross_path},
      {4, "shape pipeline", shape_pipeline},
      {5, "storage", storage},
      {6, "gradient fidelity", gradient_fidelity},
      {7, "desk-scale training", desk_training},
      {8, "cli determinism", cli_determinism},
      {9, "full-scale accuracy", full_scale},
      {10, "serialization", serialization},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %2d %-24s %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", c.id, c.name,
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::error_code ec;
  fs::remove_all(scratch_dir(), ec);
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed),
              criteria.size());
  return failed == 0 ? 0 : 1;
}
