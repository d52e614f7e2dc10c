#include "ecgbnn/modelfile.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "ecgbnn/errors.hpp"

namespace ecgbnn {

namespace {

constexpr std::string_view kModelMagic = "BECG";
constexpr std::string_view kCheckpointMagic = "BECK";
constexpr std::size_t kModelFixedHeader = 4 + 1 + 1 + 1 + 2 + 4;
constexpr std::size_t kModelBlockHeader = 2 + 2 + 1 + 1 + 1 + 1 + 1 + 1;

// LSB-first bit stream over bytes.
class BitWriter {
 public:
  void put(std::uint64_t bits, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
      if (n_ % 8 == 0) bytes_.push_back(0);
      if (((bits >> i) & 1U) != 0) bytes_.back() |= static_cast<std::uint8_t>(1U << (n_ % 8));
      ++n_;
    }
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t n_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::uint64_t get(std::size_t count) {
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < count; ++i, ++n_) {
      if (((bytes_[n_ / 8] >> (n_ % 8)) & 1U) != 0) v |= std::uint64_t{1} << i;
    }
    return v;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t n_ = 0;
};

constexpr std::size_t bytes_for_bits(std::size_t bits) { return (bits + 7) / 8; }

template <typename T>
std::size_t live_branches(const ThresholdChannel<T>& ch) {
  return (ch.pos.is_constant() ? 0U : 1U) + (ch.neg.is_constant() ? 0U : 1U);
}

std::size_t live_branches(const FusedChannelParams& p) {
  if (const auto* i = std::get_if<IntThresholdChannel>(&p)) return live_branches(*i);
  if (const auto* r = std::get_if<RealThresholdChannel>(&p)) return live_branches(*r);
  return 0;
}

template <typename T>
std::uint8_t direction_nibble(const ThresholdChannel<T>& ch) {
  return static_cast<std::uint8_t>(static_cast<unsigned>(ch.pos.cmp) |
                                   static_cast<unsigned>(ch.neg.cmp) << 2);
}

std::uint8_t direction_nibble(const FusedChannelParams& p) {
  if (const auto* i = std::get_if<IntThresholdChannel>(&p)) return direction_nibble(*i);
  return direction_nibble(std::get<RealThresholdChannel>(p));
}

std::int8_t pad_value_byte(float pad) {
  if (!(pad == std::round(pad)) || pad < -128.0F || pad > 127.0F) {
    throw InvalidValueError("model file: pad value " + std::to_string(pad) +
                            " is not an 8-bit integer");
  }
  return static_cast<std::int8_t>(pad);
}

void write_header(detail::ByteWriter& w, const NetConfig& cfg) {
  if (cfg.blocks.size() > 255 || cfg.n_classes > 0xFFFF || cfg.input_length > 0xFFFFFFFFULL) {
    throw InvalidValueError("model file: configuration exceeds header field widths");
  }
  w.bytes(kModelMagic);
  w.u8(kModelFormatVersion);
  w.u8(static_cast<std::uint8_t>(cfg.mode));
  w.u8(static_cast<std::uint8_t>(cfg.blocks.size()));
  w.u16(static_cast<std::uint16_t>(cfg.n_classes));
  w.u32(static_cast<std::uint32_t>(cfg.input_length));
  for (const BlockConfig& b : cfg.blocks) {
    if (b.in_channels > 0xFFFF || b.out_channels > 0xFFFF || b.conv.taps > 255 ||
        b.conv.stride > 255 || b.conv.padding > 255 || b.pool_size > 255 || b.pool_stride > 255) {
      throw InvalidValueError("model file: block parameter exceeds header field widths");
    }
    w.u16(static_cast<std::uint16_t>(b.in_channels));
    w.u16(static_cast<std::uint16_t>(b.out_channels));
    w.u8(static_cast<std::uint8_t>(b.conv.taps));
    w.u8(static_cast<std::uint8_t>(b.conv.stride));
    w.u8(static_cast<std::uint8_t>(b.conv.padding));
    w.i8(pad_value_byte(b.conv.pad_value));
    w.u8(static_cast<std::uint8_t>(b.pool_size));
    w.u8(static_cast<std::uint8_t>(b.pool_stride));
  }
}

std::int32_t integer_bound(const NetConfig& cfg, std::size_t b) {
  return std::get<IntegerDomain>(cfg.activation_domain(b)).bound;
}

void write_weights(detail::ByteWriter& w, const BinaryTensor& weights) {
  BitWriter bits;
  for (std::size_t r = 0; r < weights.rows(); ++r) {
    const PackedBitVector& row = weights.row(r);
    for (std::size_t pos = 0; pos < row.size(); pos += kWordBits) {
      const std::size_t count = std::min(kWordBits, row.size() - pos);
      bits.put(extract_bits(row.words(), pos, count), count);
    }
  }
  w.bytes(bits.bytes());
}

BinaryTensor read_weights(detail::ByteReader& r, const BlockConfig& blk) {
  BinaryTensor t = BinaryTensor::weights(blk.out_channels, blk.in_channels, blk.conv.taps);
  const std::size_t row_bits = t.row_bits();
  BitReader bits(r.bytes(bytes_for_bits(row_bits * blk.out_channels)));
  for (std::size_t o = 0; o < blk.out_channels; ++o) {
    std::vector<std::uint64_t> words(words_for_bits(row_bits), 0);
    for (std::size_t pos = 0; pos < row_bits; pos += kWordBits) {
      const std::size_t count = std::min(kWordBits, row_bits - pos);
      deposit_bits(words, pos, bits.get(count), count);
    }
    t.row(o) = PackedBitVector::from_words(std::move(words), row_bits);
  }
  return t;
}

void write_int_thresholds(detail::ByteWriter& w, const std::vector<FusedChannelParams>& channels,
                          std::int32_t bound) {
  const std::size_t width = threshold_bits(bound);
  const std::int64_t lo = -(std::int64_t{1} << (width - 1));
  const std::int64_t hi = (std::int64_t{1} << (width - 1)) - 1;
  BitWriter bits;
  auto put = [&](const BranchRule<std::int32_t>& rule) {
    if (rule.is_constant()) return;
    if (rule.threshold < lo || rule.threshold > hi) {
      throw InvalidValueError("model file: threshold " + std::to_string(rule.threshold) +
                              " does not fit in " + std::to_string(width) + " bits");
    }
    bits.put(static_cast<std::uint64_t>(static_cast<std::int64_t>(rule.threshold)) &
                 ((std::uint64_t{1} << width) - 1),
             width);
  };
  for (const FusedChannelParams& p : channels) {
    const auto& ch = std::get<IntThresholdChannel>(p);
    put(ch.pos);
    put(ch.neg);
  }
  w.bytes(bits.bytes());
}

Comparison comparison_from(unsigned v) { return static_cast<Comparison>(v & 3U); }

}  // namespace

std::size_t threshold_bits(std::int32_t bound) {
  return static_cast<std::size_t>(std::bit_width(static_cast<std::uint32_t>(bound))) + 1;
}

std::size_t ModelLayout::weight_bytes() const {
  std::size_t n = 0;
  for (const BlockSectionSize& b : blocks) n += b.weight_bytes;
  return n;
}

std::size_t ModelLayout::threshold_bytes() const {
  std::size_t n = 0;
  for (const BlockSectionSize& b : blocks) n += b.direction_bytes + b.threshold_value_bytes;
  return n;
}

ModelLayout model_layout(const FusedModel& model) {
  model.validate();
  const NetConfig& cfg = model.config;
  ModelLayout layout;
  layout.header_bytes = kModelFixedHeader + kModelBlockHeader * cfg.blocks.size();
  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const BlockConfig& blk = cfg.blocks[b];
    const FusedBlock& fb = model.blocks[b];
    BlockSectionSize s;
    s.weight_bits = blk.out_channels * blk.in_channels * blk.conv.taps;
    s.weight_bytes = bytes_for_bits(s.weight_bits);
    if (b + 1 == cfg.blocks.size()) {
      s.threshold_value_bytes = 12 * blk.out_channels;
    } else {
      s.direction_bytes = (blk.out_channels + 1) / 2;
      std::size_t live = 0;
      for (const FusedChannelParams& p : fb.channels) live += live_branches(p);
      if (std::holds_alternative<RealDomain>(cfg.activation_domain(b))) {
        s.threshold_value_bytes = 4 * live;
      } else {
        s.threshold_value_bytes = bytes_for_bits(live * threshold_bits(integer_bound(cfg, b)));
      }
    }
    layout.blocks.push_back(s);
  }
  return layout;
}

std::vector<std::uint8_t> serialize_model(const FusedModel& model) {
  model.validate();
  const NetConfig& cfg = model.config;
  detail::ByteWriter w;
  write_header(w, cfg);
  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const FusedBlock& fb = model.blocks[b];
    write_weights(w, fb.weights);
    if (b + 1 == cfg.blocks.size()) {
      for (const FusedChannelParams& p : fb.channels) {
        const auto& a = std::get<AffineChannel>(p);
        w.f32(a.k);
        w.f32(a.b);
        w.f32(a.a);
      }
      continue;
    }
    for (std::size_t c = 0; c < fb.channels.size(); c += 2) {
      std::uint8_t byte = direction_nibble(fb.channels[c]);
      if (c + 1 < fb.channels.size()) {
        byte = static_cast<std::uint8_t>(byte | direction_nibble(fb.channels[c + 1]) << 4);
      }
      w.u8(byte);
    }
    if (std::holds_alternative<RealDomain>(cfg.activation_domain(b))) {
      for (const FusedChannelParams& p : fb.channels) {
        const auto& ch = std::get<RealThresholdChannel>(p);
        if (!ch.pos.is_constant()) w.f32(ch.pos.threshold);
        if (!ch.neg.is_constant()) w.f32(ch.neg.threshold);
      }
    } else {
      write_int_thresholds(w, fb.channels, integer_bound(cfg, b));
    }
  }
  w.crc();
  return w.take();
}

FusedModel deserialize_model(std::span<const std::uint8_t> bytes) {
  const std::string what = "model file";
  detail::ByteReader r(bytes, what);
  if (bytes.size() < kModelMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kModelMagic.size()) != kModelMagic) {
    throw FormatError(FormatError::Kind::kBadMagic, what + ": bad magic");
  }
  r.bytes(kModelMagic.size());
  const std::uint8_t version = r.u8();
  if (version != kModelFormatVersion) {
    throw FormatError(FormatError::Kind::kBadVersion,
                      what + ": unsupported version " + std::to_string(version));
  }
  r.need(kModelFixedHeader - kModelMagic.size() - 1 + 4);
  detail::check_trailing_crc(bytes, what);
  r = detail::ByteReader(bytes.first(bytes.size() - 4), what);
  r.bytes(kModelMagic.size() + 1);

  FusedModel m;
  NetConfig& cfg = m.config;
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw FormatError(FormatError::Kind::kInvalid, what + ": unknown mode");
  cfg.mode = static_cast<Mode>(mode);
  const std::size_t n_blocks = r.u8();
  cfg.n_classes = r.u16();
  cfg.input_length = r.u32();
  for (std::size_t b = 0; b < n_blocks; ++b) {
    BlockConfig blk;
    blk.in_channels = r.u16();
    blk.out_channels = r.u16();
    blk.conv.taps = r.u8();
    blk.conv.stride = r.u8();
    blk.conv.padding = r.u8();
    blk.conv.pad_value = static_cast<float>(r.i8());
    blk.pool_size = r.u8();
    blk.pool_stride = r.u8();
    cfg.blocks.push_back(blk);
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw FormatError(FormatError::Kind::kInvalid, what + ": " + e.what());
  }

  for (std::size_t b = 0; b < n_blocks; ++b) {
    const BlockConfig& blk = cfg.blocks[b];
    FusedBlock fb;
    fb.weights = read_weights(r, blk);
    if (b + 1 == n_blocks) {
      for (std::size_t c = 0; c < blk.out_channels; ++c) {
        AffineChannel a;
        a.k = r.f32();
        a.b = r.f32();
        a.a = r.f32();
        fb.channels.emplace_back(a);
      }
      m.blocks.push_back(std::move(fb));
      continue;
    }
    std::vector<unsigned> nibbles;
    const auto dirs = r.bytes((blk.out_channels + 1) / 2);
    for (std::size_t c = 0; c < blk.out_channels; ++c) {
      nibbles.push_back((dirs[c / 2] >> (4 * (c % 2))) & 0xFU);
    }
    if (std::holds_alternative<RealDomain>(cfg.activation_domain(b))) {
      for (unsigned nib : nibbles) {
        RealThresholdChannel ch;
        ch.pos.cmp = comparison_from(nib);
        ch.neg.cmp = comparison_from(nib >> 2);
        if (!ch.pos.is_constant()) ch.pos.threshold = r.f32();
        if (!ch.neg.is_constant()) ch.neg.threshold = r.f32();
        fb.channels.emplace_back(ch);
      }
    } else {
      const std::size_t width = threshold_bits(integer_bound(cfg, b));
      std::size_t live = 0;
      for (unsigned nib : nibbles) {
        live += (comparison_from(nib) <= Comparison::kLessEqual ? 1U : 0U) +
                (comparison_from(nib >> 2) <= Comparison::kLessEqual ? 1U : 0U);
      }
      BitReader bits(r.bytes(bytes_for_bits(live * width)));
      auto take = [&]() {
        const std::uint64_t raw = bits.get(width);
        const std::uint64_t sign_bit = std::uint64_t{1} << (width - 1);
        return static_cast<std::int32_t>(static_cast<std::int64_t>(raw ^ sign_bit) -
                                         static_cast<std::int64_t>(sign_bit));
      };
      for (unsigned nib : nibbles) {
        IntThresholdChannel ch;
        ch.pos.cmp = comparison_from(nib);
        ch.neg.cmp = comparison_from(nib >> 2);
        if (!ch.pos.is_constant()) ch.pos.threshold = take();
        if (!ch.neg.is_constant()) ch.neg.threshold = take();
        fb.channels.emplace_back(ch);
      }
    }
    m.blocks.push_back(std::move(fb));
  }
  if (r.remaining() != 0) {
    throw FormatError(FormatError::Kind::kInvalid,
                      what + ": " + std::to_string(r.remaining()) + " unexpected trailing bytes");
  }
  return m;
}

std::size_t save_model(const FusedModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  detail::write_file(path, bytes);
  return bytes.size();
}

FusedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(detail::read_file(path));
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void write_net(detail::ByteWriter& w, const NetConfig& cfg) {
  w.u8(static_cast<std::uint8_t>(cfg.mode));
  w.u32(static_cast<std::uint32_t>(cfg.n_classes));
  w.u32(static_cast<std::uint32_t>(cfg.input_length));
  w.u32(static_cast<std::uint32_t>(cfg.blocks.size()));
  for (const BlockConfig& b : cfg.blocks) {
    w.u32(static_cast<std::uint32_t>(b.in_channels));
    w.u32(static_cast<std::uint32_t>(b.out_channels));
    w.u32(static_cast<std::uint32_t>(b.conv.taps));
    w.u32(static_cast<std::uint32_t>(b.conv.stride));
    w.u32(static_cast<std::uint32_t>(b.conv.padding));
    w.f32(b.conv.pad_value);
    w.u32(static_cast<std::uint32_t>(b.pool_size));
    w.u32(static_cast<std::uint32_t>(b.pool_stride));
  }
}

NetConfig read_net(detail::ByteReader& r) {
  NetConfig cfg;
  const std::uint8_t mode = r.u8();
  if (mode > 1) throw FormatError(FormatError::Kind::kInvalid, "checkpoint: unknown mode");
  cfg.mode = static_cast<Mode>(mode);
  cfg.n_classes = r.u32();
  cfg.input_length = r.u32();
  const std::size_t n = r.u32();
  r.need(n * 32);
  for (std::size_t i = 0; i < n; ++i) {
    BlockConfig b;
    b.in_channels = r.u32();
    b.out_channels = r.u32();
    b.conv.taps = r.u32();
    b.conv.stride = r.u32();
    b.conv.padding = r.u32();
    b.conv.pad_value = r.f32();
    b.pool_size = r.u32();
    b.pool_stride = r.u32();
    cfg.blocks.push_back(b);
  }
  return cfg;
}

void write_train(detail::ByteWriter& w, const TrainConfig& t) {
  w.u64(t.batch_size);
  w.f64(t.learning_rate);
  w.u64(t.epochs);
  w.u64(t.seed);
  w.u8(static_cast<std::uint8_t>(t.optimizer));
  w.f64(t.adam_beta1);
  w.f64(t.adam_beta2);
  w.f64(t.adam_eps);
  w.f64(t.sgd_momentum);
  w.u8(static_cast<std::uint8_t>(t.surrogate.kind));
  w.f64(t.surrogate.clip);
  w.f64(t.bn_momentum);
  w.f64(t.weight_init_scale);
  w.u8(t.binarize ? 1 : 0);
}

TrainConfig read_train(detail::ByteReader& r) {
  TrainConfig t;
  t.batch_size = r.u64();
  t.learning_rate = r.f64();
  t.epochs = r.u64();
  t.seed = r.u64();
  const std::uint8_t opt = r.u8();
  if (opt > 1) throw FormatError(FormatError::Kind::kInvalid, "checkpoint: unknown optimizer");
  t.optimizer = static_cast<OptimizerKind>(opt);
  t.adam_beta1 = r.f64();
  t.adam_beta2 = r.f64();
  t.adam_eps = r.f64();
  t.sgd_momentum = r.f64();
  const std::uint8_t sur = r.u8();
  if (sur > 1) throw FormatError(FormatError::Kind::kInvalid, "checkpoint: unknown surrogate");
  t.surrogate.kind = static_cast<SurrogateKind>(sur);
  t.surrogate.clip = r.f64();
  t.bn_momentum = r.f64();
  t.weight_init_scale = r.f64();
  t.binarize = r.u8() != 0;
  return t;
}

void write_floats(detail::ByteWriter& w, const std::vector<float>& v) {
  w.u32(static_cast<std::uint32_t>(v.size()));
  w.f32s(v);
}

std::vector<float> read_floats(detail::ByteReader& r) {
  const std::size_t n = r.u32();
  return r.f32s(n);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const TrainingState& s) {
  detail::ByteWriter w;
  w.bytes(kCheckpointMagic);
  w.u8(kCheckpointFormatVersion);
  write_net(w, s.net);
  write_train(w, s.train);
  w.u64(s.epoch);
  w.u32(static_cast<std::uint32_t>(s.history.size()));
  for (const EpochRecord& e : s.history) {
    w.u64(e.epoch);
    w.f64(e.train_loss);
    w.f64(e.train_accuracy);
    w.f64(e.eval_accuracy);
  }
  w.u32(static_cast<std::uint32_t>(s.rng_state.size()));
  w.bytes(s.rng_state);

  w.f32(s.params.eps);
  w.u32(static_cast<std::uint32_t>(s.params.blocks.size()));
  for (const BlockParams& b : s.params.blocks) {
    w.u32(static_cast<std::uint32_t>(b.in_channels));
    w.u32(static_cast<std::uint32_t>(b.out_channels));
    w.u32(static_cast<std::uint32_t>(b.taps));
    write_floats(w, b.weights);
    write_floats(w, b.slope);
    write_floats(w, b.gamma);
    write_floats(w, b.beta);
    write_floats(w, b.running_mean);
    write_floats(w, b.running_var);
  }

  w.u64(s.optimizer.step);
  w.u32(static_cast<std::uint32_t>(s.optimizer.first_moment.size()));
  for (const auto& m : s.optimizer.first_moment) write_floats(w, m);
  w.u32(static_cast<std::uint32_t>(s.optimizer.second_moment.size()));
  for (const auto& v : s.optimizer.second_moment) write_floats(w, v);
  w.crc();
  return w.take();
}

TrainingState deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  const std::string what = "checkpoint";
  detail::ByteReader r(bytes, what);
  if (bytes.size() < kCheckpointMagic.size() ||
      std::string_view(reinterpret_cast<const char*>(bytes.data()), kCheckpointMagic.size()) !=
          kCheckpointMagic) {
    throw FormatError(FormatError::Kind::kBadMagic, what + ": bad magic");
  }
  r.bytes(kCheckpointMagic.size());
  const std::uint8_t version = r.u8();
  if (version != kCheckpointFormatVersion) {
    throw FormatError(FormatError::Kind::kBadVersion,
                      what + ": unsupported version " + std::to_string(version));
  }
  detail::check_trailing_crc(bytes, what);
  r = detail::ByteReader(bytes.first(bytes.size() - 4), what);
  r.bytes(kCheckpointMagic.size() + 1);

  TrainingState s;
  s.net = read_net(r);
  s.train = read_train(r);
  s.epoch = r.u64();
  const std::size_t n_hist = r.u32();
  r.need(n_hist * 32);
  for (std::size_t i = 0; i < n_hist; ++i) {
    EpochRecord e;
    e.epoch = r.u64();
    e.train_loss = r.f64();
    e.train_accuracy = r.f64();
    e.eval_accuracy = r.f64();
    s.history.push_back(e);
  }
  const std::size_t rng_len = r.u32();
  const auto rng = r.bytes(rng_len);
  s.rng_state.assign(rng.begin(), rng.end());

  s.params.eps = r.f32();
  const std::size_t n_blocks = r.u32();
  r.need(n_blocks * 12);
  for (std::size_t i = 0; i < n_blocks; ++i) {
    BlockParams b;
    b.in_channels = r.u32();
    b.out_channels = r.u32();
    b.taps = r.u32();
    b.weights = read_floats(r);
    b.slope = read_floats(r);
    b.gamma = read_floats(r);
    b.beta = read_floats(r);
    b.running_mean = read_floats(r);
    b.running_var = read_floats(r);
    s.params.blocks.push_back(std::move(b));
  }

  s.optimizer.step = r.u64();
  const std::size_t n_first = r.u32();
  r.need(n_first * 4);
  for (std::size_t i = 0; i < n_first; ++i) s.optimizer.first_moment.push_back(read_floats(r));
  const std::size_t n_second = r.u32();
  r.need(n_second * 4);
  for (std::size_t i = 0; i < n_second; ++i) s.optimizer.second_moment.push_back(read_floats(r));

  if (r.remaining() != 0) {
    throw FormatError(FormatError::Kind::kInvalid, what + ": unexpected trailing bytes");
  }
  try {
    s.net.validate();
    s.train.validate();
    s.params.validate(s.net);
  } catch (const Error& e) {
    throw FormatError(FormatError::Kind::kInvalid, what + ": " + e.what());
  }
  return s;
}

std::size_t save_checkpoint(const TrainingState& state, const std::filesystem::path& path) {
  const auto bytes = serialize_checkpoint(state);
  detail::write_file(path, bytes);
  return bytes.size();
}

TrainingState load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint(detail::read_file(path));
}

}  // namespace ecgbnn
