#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ecgbnn/data.hpp"
#include "ecgbnn/errors.hpp"
#include "ecgbnn/metrics.hpp"
#include "ecgbnn/model.hpp"
#include "ecgbnn/modelfile.hpp"
#include "ecgbnn/train.hpp"

namespace ecgbnn::cli {

namespace {

using Json = nlohmann::ordered_json;

enum class Level { kQuiet = 0, kInfo = 1, kDebug = 2 };

class Log {
 public:
  explicit Log(std::ostream& err) : err_(err) {
    const char* env = std::getenv("ECGBNN_LOG_LEVEL");
    const std::string v = env != nullptr ? env : "info";
    if (v == "quiet" || v == "error") {
      level_ = Level::kQuiet;
    } else if (v == "debug") {
      level_ = Level::kDebug;
    }
  }
  void info(const std::string& msg) const {
    if (level_ >= Level::kInfo) err_ << msg << '\n';
  }
  void debug(const std::string& msg) const {
    if (level_ >= Level::kDebug) err_ << msg << '\n';
  }
  void error(const std::string& msg) const { err_ << "error: " << msg << '\n'; }

 private:
  std::ostream& err_;
  Level level_ = Level::kInfo;
};

struct TrainArgs {
  std::string data;
  std::size_t classes = 5;
  std::string mode = "bp";
  std::size_t epochs = 1000;
  std::size_t batch_size = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;
  std::string surrogate = "clipped_ste";
  std::string optimizer = "adam";
  std::string out;
  std::string checkpoint;
  std::string resume;
  std::size_t input_length = 0;
  double train_fraction = 0.8;
  bool json = false;
  bool epochs_given = false;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Loads a dataset and checks it against a model's class count and input
// length. Incompatibilities are usage errors, not file errors.
Dataset load_for_model(const std::string& path, std::size_t n_classes, std::size_t length) {
  Dataset d = load_dataset(path, 0, LabelScheme::custom(0xFFFF));
  if (d.empty()) throw InvalidInputError(path + " contains no segments");
  if (length != 0 && d.length != length) {
    throw DimensionError(path + " has segments of length " + std::to_string(d.length) +
                         " but the model expects " + std::to_string(length));
  }
  for (const EcgSegment& s : d.segments) {
    if (s.label >= n_classes) {
      throw InvalidLabelError(path + " has label " + std::to_string(s.label) + " but the model has " +
                              std::to_string(n_classes) + " classes");
    }
  }
  d.labels = LabelScheme::for_classes(n_classes);
  return d;
}

Prediction predict_fused(const FusedModel& model, std::span<const float> standardized_samples) {
  if (model.config.mode == Mode::kLP) {
    return forward_fused(model, lp_quantize_input(standardized_samples));
  }
  RealFeatureMap x(1, standardized_samples.size());
  std::copy(standardized_samples.begin(), standardized_samples.end(), x.values.begin());
  return forward_fused(model, x);
}

// Expects a standardized dataset.
ConfusionMatrix evaluate(const FusedModel& model, const Dataset& data) {
  ConfusionMatrix m(model.config.n_classes);
  for (const EcgSegment& s : data.segments) m.add(s.label, predict_fused(model, s.samples).label);
  return m;
}

Json parse(const std::string& doc) { return Json::parse(doc); }

Json eval_json(const ConfusionMatrix& cm, const MetricReport& mr, const StorageReport& sr) {
  Json j;
  j["confusion"] = parse(to_json(cm));
  j["metrics"] = parse(to_json(mr));
  j["storage"] = parse(to_json(sr));
  return j;
}

int verify_or_fail(const FusedModel& model, const TrainedParams& params, const Log& log) {
  const std::vector<FusionReport> reports = verify_model(model, params);
  std::size_t points = 0;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    points += reports[i].points_checked;
    if (!reports[i].ok) {
      log.error("fusion verification failed on channel " + std::to_string(i) + ": " +
                reports[i].detail);
      return kInternal;
    }
  }
  log.info("fusion verified on " + std::to_string(reports.size()) + " channels (" +
           std::to_string(points) + " points)");
  return kOk;
}

int cmd_train(const TrainArgs& a, std::ostream& out, const Log& log) {
  std::optional<Trainer> trainer;
  if (!a.resume.empty()) {
    TrainingState state = load_checkpoint(a.resume);
    log.info("resuming " + a.resume + " after epoch " + std::to_string(state.epoch));
    trainer.emplace(std::move(state));
  }

  const std::size_t classes = trainer ? trainer->net_config().n_classes : a.classes;
  if (classes < 2) throw InvalidValueError("--classes must be at least 2");
  const std::size_t expected_length =
      trainer ? trainer->net_config().input_length : a.input_length;
  Dataset data = load_for_model(a.data, classes, expected_length);
  log.info("loaded " + std::to_string(data.size()) + " segments of length " +
           std::to_string(data.length) + " from " + a.data);
  data = standardized(std::move(data));
  const std::uint64_t seed = trainer ? trainer->train_config().seed : a.seed;
  Split parts = split(data, a.train_fraction, seed);
  for (const std::string& w : parts.warnings) log.info("warning: " + w);
  log.info("train " + std::to_string(parts.train.size()) + " / test " +
           std::to_string(parts.test.size()));

  if (!trainer) {
    const NetConfig net = build_default_config(classes, parse_mode(a.mode), data.length);
    TrainConfig tc = default_train_config(classes);
    tc.epochs = a.epochs;
    if (a.batch_size != 0) tc.batch_size = a.batch_size;
    if (a.lr != 0.0) tc.learning_rate = a.lr;
    tc.seed = a.seed;
    tc.surrogate.kind = parse_surrogate(a.surrogate);
    if (a.optimizer == "adam") {
      tc.optimizer = OptimizerKind::kAdam;
    } else if (a.optimizer == "sgd") {
      tc.optimizer = OptimizerKind::kSgd;
      tc.sgd_momentum = 0.9;
    } else {
      throw InvalidValueError("unknown optimizer '" + a.optimizer + "' (expected adam or sgd)");
    }
    trainer.emplace(net, tc);
  } else if (a.epochs_given) {
    trainer->set_epochs(a.epochs);
  }
  const TrainConfig& tc = trainer->train_config();
  log.info("mode " + std::string(to_string(trainer->net_config().mode)) + ", batch " +
           std::to_string(tc.batch_size) + ", lr " + fixed(tc.learning_rate, 6) + ", epochs " +
           std::to_string(tc.epochs) + ", surrogate " + std::string(to_string(tc.surrogate.kind)));

  const Dataset* eval = parts.test.empty() ? nullptr : &parts.test;
  trainer->fit(parts.train, eval, [&](const EpochRecord& r) {
    std::string line = "epoch " + std::to_string(r.epoch) + " loss " + fixed(r.train_loss, 6) +
                       " train_acc " + fixed(r.train_accuracy, 4);
    if (r.eval_accuracy >= 0.0) line += " test_acc " + fixed(r.eval_accuracy, 4);
    if (a.json) {
      log.info(line);
    } else {
      out << line << '\n' << std::flush;
    }
  });

  const std::string ckpt = a.checkpoint.empty() ? a.out + ".ckpt" : a.checkpoint;
  save_checkpoint(trainer->state(), ckpt);
  log.info("checkpoint written to " + ckpt);

  const FusedModel model = fuse(trainer->params(), trainer->net_config());
  if (const int rc = verify_or_fail(model, trainer->params(), log); rc != kOk) return rc;
  const std::size_t bytes = save_model(model, a.out);
  log.info("model written to " + a.out + " (" + std::to_string(bytes) + " bytes)");

  const Dataset& scored = eval != nullptr ? *eval : parts.train;
  const ConfusionMatrix cm = evaluate(model, scored);
  const MetricReport mr = metric_report(cm);
  const StorageReport sr = storage_report(model);
  if (a.json) {
    Json j;
    j["schema"] = "ecgbnn.train/1";
    Json hist = Json::array();
    for (const EpochRecord& r : trainer->history()) {
      hist.push_back({{"epoch", r.epoch},
                      {"loss", r.train_loss},
                      {"train_acc", r.train_accuracy},
                      {"test_acc", r.eval_accuracy >= 0.0 ? Json(r.eval_accuracy) : Json(nullptr)}});
    }
    j["history"] = hist;
    j["evaluated_on"] = eval != nullptr ? "test" : "train";
    const Json e = eval_json(cm, mr, sr);
    for (const auto& [k, v] : e.items()) j[k] = v;
    j["model"] = a.out;
    j["checkpoint"] = ckpt;
    out << j.dump(2) << '\n';
  } else {
    out << "\nfused model on the " << (eval != nullptr ? "test" : "training") << " split\n";
    out << render_text(cm, data.labels) << '\n' << render_text(mr, data.labels) << '\n'
        << render_text(sr);
  }
  return kOk;
}

int cmd_fuse(const std::string& checkpoint, const std::string& out_path, bool json,
             std::ostream& out, const Log& log) {
  const TrainingState state = load_checkpoint(checkpoint);
  const FusedModel model = fuse(state.params, state.net);
  if (const int rc = verify_or_fail(model, state.params, log); rc != kOk) return rc;
  const std::size_t bytes = save_model(model, out_path);
  const StorageReport sr = storage_report(model);
  if (json) {
    Json j;
    j["schema"] = "ecgbnn.fuse/1";
    j["model"] = out_path;
    j["file_bytes"] = bytes;
    j["storage"] = parse(to_json(sr));
    out << j.dump(2) << '\n';
  } else {
    out << "wrote " << out_path << " (" << bytes << " bytes)\n" << render_text(sr);
  }
  return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path, bool json,
             std::ostream& out, const Log& log) {
  const FusedModel model = load_model(model_path);
  Dataset data = load_for_model(data_path, model.config.n_classes, model.config.input_length);
  log.info("evaluating " + std::to_string(data.size()) + " segments");
  data = standardized(std::move(data));
  const ConfusionMatrix cm = evaluate(model, data);
  const MetricReport mr = metric_report(cm);
  const StorageReport sr = storage_report(model);
  if (json) {
    Json j;
    j["schema"] = "ecgbnn.eval/1";
    const Json e = eval_json(cm, mr, sr);
    for (const auto& [k, v] : e.items()) j[k] = v;
    out << j.dump(2) << '\n';
  } else {
    out << render_text(cm, data.labels) << '\n' << render_text(mr, data.labels) << '\n'
        << render_text(sr);
  }
  return kOk;
}

// One segment: `length` samples, optionally followed by a label, on the
// first row that is not a header.
std::vector<float> read_segment(const std::string& path, std::size_t length) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<float> values;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const float v = std::stof(cell, &used);
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos || !std::isfinite(v)) {
          numeric = false;
          break;
        }
        values.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (row == 1) continue;  // header
      throw ParseError(row, "not a row of numbers");
    }
    if (values.size() == length + 1) values.pop_back();
    if (values.size() != length) {
      throw ParseError(row, "has " + std::to_string(values.size()) + " samples, the model expects " +
                                std::to_string(length));
    }
    return values;
  }
  throw ParseError(row, "no segment found");
}

int cmd_predict(const std::string& model_path, const std::string& input, bool json,
                std::ostream& out) {
  const FusedModel model = load_model(model_path);
  const std::vector<float> samples = standardize(read_segment(input, model.config.input_length));
  const Prediction p = predict_fused(model, samples);
  const LabelScheme scheme = LabelScheme::for_classes(model.config.n_classes);
  if (json) {
    Json j;
    j["schema"] = "ecgbnn.predict/1";
    j["class"] = p.label;
    j["name"] = scheme.name(p.label);
    j["logits"] = p.logits;
    out << j.dump(2) << '\n';
  } else {
    out << "class " << p.label << " " << scheme.name(p.label) << '\n' << "logits";
    for (double z : p.logits) out << ' ' << z;
    out << '\n';
  }
  return kOk;
}

int cmd_bench(const std::string& model_path, std::size_t iters, bool compare, std::uint64_t seed,
              bool json, std::ostream& out) {
  if (iters == 0) throw InvalidValueError("--iters must be at least 1");
  const FusedModel model = load_model(model_path);
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> noise(0.0F, 1.0F);
  std::vector<float> samples(model.config.input_length);
  for (float& v : samples) v = noise(rng);
  samples = standardize(samples);

  RealFeatureMap real(1, samples.size());
  std::copy(samples.begin(), samples.end(), real.values.begin());
  const BinaryTensor binary = lp_quantize_input(samples);

  using Clock = std::chrono::steady_clock;
  std::size_t sink = 0;
  auto time_it = [&](auto&& fn) {
    fn();  // warm-up
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < iters; ++i) sink += fn();
    const double s = std::chrono::duration<double>(Clock::now() - t0).count();
    return static_cast<double>(iters) / std::max(s, 1e-9);
  };
  const double fused = time_it([&] {
    return model.config.mode == Mode::kLP ? forward_fused(model, binary).label
                                          : forward_fused(model, real).label;
  });
  double reference = 0.0;
  if (compare) reference = time_it([&] { return forward_fused_float(model, real).label; });

  if (json) {
    Json j;
    j["schema"] = "ecgbnn.bench/1";
    j["iters"] = iters;
    j["fused_segments_per_s"] = fused;
    if (compare) {
      j["reference_segments_per_s"] = reference;
      j["speedup"] = fused / reference;
    }
    out << j.dump(2) << '\n';
  } else {
    out << "fused (xnor-popcount)  " << fixed(fused, 1) << " segments/s\n";
    if (compare) {
      out << "reference (float mac)  " << fixed(reference, 1) << " segments/s\n";
      out << "speedup                " << fixed(fused / reference, 2) << "x\n";
    }
  }
  return sink == static_cast<std::size_t>(-1) ? kInternal : kOk;
}

int cmd_inspect(const std::string& model_path, bool json, std::ostream& out) {
  const FusedModel model = load_model(model_path);
  const NetConfig& cfg = model.config;
  const std::vector<BlockShape> shapes = cfg.shapes();
  const StorageReport sr = storage_report(model);
  if (json) {
    Json j;
    j["schema"] = "ecgbnn.inspect/1";
    j["mode"] = std::string(to_string(cfg.mode));
    j["n_classes"] = cfg.n_classes;
    j["input_length"] = cfg.input_length;
    Json blocks = Json::array();
    for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
      const BlockConfig& blk = cfg.blocks[b];
      blocks.push_back({{"in_channels", blk.in_channels},
                        {"out_channels", blk.out_channels},
                        {"kernel", blk.conv.taps},
                        {"stride", blk.conv.stride},
                        {"padding", blk.conv.padding},
                        {"pad_value", blk.conv.pad_value},
                        {"pool_size", blk.pool_size},
                        {"pool_stride", blk.pool_stride},
                        {"conv_length", shapes[b].conv_length},
                        {"pool_length", shapes[b].pool_length}});
    }
    j["blocks"] = blocks;
    j["gsp_length"] = shapes.back().pool_length;
    j["storage"] = parse(to_json(sr));
    out << j.dump(2) << '\n';
    return kOk;
  }
  out << "mode " << to_string(cfg.mode) << ", " << cfg.n_classes << " classes, input length "
      << cfg.input_length << "\n\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %5s %5s %3s %6s %4s %4s %7s %9s %9s\n", "block", "in",
                "out", "K", "stride", "pad", "padv", "pool", "conv_len", "pool_len");
  out << line;
  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const BlockConfig& blk = cfg.blocks[b];
    const std::string pool = std::to_string(blk.pool_size) + "/" + std::to_string(blk.pool_stride);
    std::snprintf(line, sizeof line, "%-6zu %5zu %5zu %3zu %6zu %4zu %4g %7s %9zu %9zu\n", b + 1,
                  blk.in_channels, blk.out_channels, blk.conv.taps, blk.conv.stride,
                  blk.conv.padding, static_cast<double>(blk.conv.pad_value), pool.c_str(),
                  shapes[b].conv_length, shapes[b].pool_length);
    out << line;
  }
  out << "GSP over " << shapes.back().pool_length << " positions -> argmax over " << cfg.n_classes
      << " classes\n\n"
      << render_text(sr);
  return kOk;
}

int cmd_synth(std::size_t classes, std::size_t per_class, std::size_t length, double noise,
              std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  const Dataset d =
      synth_dataset(LabelScheme::for_classes(classes), per_class, length, noise, seed);
  if (out_path.size() >= 5 && out_path.substr(out_path.size() - 5) == ".ecgs") {
    save_packed(d, out_path);
  } else {
    save_csv(d, out_path);
  }
  out << "wrote " << d.size() << " segments of length " << d.length << " to " << out_path << '\n';
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Log log(err);
  CLI::App app{"Binary ECG classifier: train, fuse, evaluate and deploy", "ecgbnn"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);

  TrainArgs ta;
  CLI::App* train = app.add_subcommand("train", "Train a network and write checkpoint + fused model");
  train->add_option("--data", ta.data, "Segments (CSV or packed ECGS file)")->required();
  train->add_option("--classes", ta.classes, "Number of classes (5 or 17 pick the published defaults)")
      ->capture_default_str();
  train->add_option("--mode", ta.mode, "bp (real input) or lp (binarized input)")
      ->capture_default_str();
  train->add_option("--epochs", ta.epochs, "Total epochs")->capture_default_str();
  train->add_option("--batch-size", ta.batch_size, "Mini-batch size (default 512 for 5 classes, 64 for 17)");
  train->add_option("--lr", ta.lr, "Learning rate (default 0.02 for 5 classes, 0.002 for 17)");
  train->add_option("--seed", ta.seed, "Seed for init, split and shuffling")->capture_default_str();
  train->add_option("--surrogate", ta.surrogate, "Sign gradient: clipped_ste or polynomial")
      ->capture_default_str();
  train->add_option("--optimizer", ta.optimizer, "adam or sgd")->capture_default_str();
  train->add_option("--out", ta.out, "Fused model output path")->required();
  train->add_option("--checkpoint", ta.checkpoint, "Checkpoint output path (default <out>.ckpt)");
  train->add_option("--resume", ta.resume, "Continue from a checkpoint");
  train->add_option("--input-length", ta.input_length, "Expected segment length (default: from data)");
  train->add_option("--train-fraction", ta.train_fraction, "Per-class train share")
      ->capture_default_str();
  train->add_flag("--json", ta.json, "Print the final report as JSON");

  std::string ckpt_path;
  std::string fuse_out;
  bool fuse_json = false;
  CLI::App* fuse_cmd = app.add_subcommand("fuse", "Fuse a checkpoint into a deployment model");
  fuse_cmd->add_option("--checkpoint", ckpt_path, "Training checkpoint")->required();
  fuse_cmd->add_option("--out", fuse_out, "Fused model output path")->required();
  fuse_cmd->add_flag("--json", fuse_json, "JSON output");

  std::string model_path;
  std::string data_path;
  bool json = false;
  CLI::App* eval = app.add_subcommand("eval", "Confusion matrix, metrics and storage of a model");
  eval->add_option("--model", model_path, "Fused model")->required();
  eval->add_option("--data", data_path, "Segments (CSV or packed ECGS file)")->required();
  eval->add_flag("--json", json, "JSON output");

  std::string input_path;
  CLI::App* predict = app.add_subcommand("predict", "Classify one segment");
  predict->add_option("--model", model_path, "Fused model")->required();
  predict->add_option("--input", input_path, "CSV with one segment")->required();
  predict->add_flag("--json", json, "JSON output");

  std::size_t iters = 100;
  bool compare = false;
  std::uint64_t bench_seed = 0;
  CLI::App* bench = app.add_subcommand("bench", "Inference throughput");
  bench->add_option("--model", model_path, "Fused model")->required();
  bench->add_option("--iters", iters, "Timed iterations")->capture_default_str();
  bench->add_flag("--compare-reference", compare, "Also time float multiply-accumulate inference");
  bench->add_option("--seed", bench_seed, "Seed of the synthetic input")->capture_default_str();
  bench->add_flag("--json", json, "JSON output");

  CLI::App* inspect = app.add_subcommand("inspect", "Architecture table and storage report");
  inspect->add_option("--model", model_path, "Fused model")->required();
  inspect->add_flag("--json", json, "JSON output");

  std::size_t synth_classes = 5;
  std::size_t per_class = 200;
  std::size_t synth_length = 3600;
  double synth_noise = 0.1;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic dataset (CSV, or packed if *.ecgs)");
  synth->add_option("--classes", synth_classes, "Number of classes")->capture_default_str();
  synth->add_option("--per-class", per_class, "Segments per class")->capture_default_str();
  synth->add_option("--length", synth_length, "Samples per segment")->capture_default_str();
  synth->add_option("--noise", synth_noise, "Gaussian noise sigma")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (train->parsed()) {
      ta.epochs_given = train->get_option("--epochs")->count() > 0;
      return cmd_train(ta, out, log);
    }
    if (fuse_cmd->parsed()) return cmd_fuse(ckpt_path, fuse_out, fuse_json, out, log);
    if (eval->parsed()) return cmd_eval(model_path, data_path, json, out, log);
    if (predict->parsed()) return cmd_predict(model_path, input_path, json, out);
    if (bench->parsed()) return cmd_bench(model_path, iters, compare, bench_seed, json, out);
    if (inspect->parsed()) return cmd_inspect(model_path, json, out);
    if (synth->parsed()) {
      return cmd_synth(synth_classes, per_class, synth_length, synth_noise, synth_seed, synth_out, out);
    }
  } catch (const IoError& e) {
    log.error(e.what());
    return kIo;
  } catch (const FormatError& e) {
    log.error(e.what());
    return kIo;
  } catch (const ParseError& e) {
    log.error(e.what());
    return kIo;
  } catch (const InvalidValueError& e) {
    log.error(e.what());
    return kUsage;
  } catch (const DimensionError& e) {
    log.error(e.what());
    return kUsage;
  } catch (const InvalidLabelError& e) {
    log.error(e.what());
    return kUsage;
  } catch (const InvalidInputError& e) {
    log.error(e.what());
    return kUsage;
  } catch (const EmptyOutputError& e) {
    log.error(e.what());
    return kUsage;
  } catch (const std::exception& e) {
    log.error(std::string("internal: ") + e.what());
    return kInternal;
  }
  return kInternal;
}

}  // namespace ecgbnn::cli
