#include "ecgbnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "byte_io.hpp"
#include "ecgbnn/errors.hpp"

namespace ecgbnn {

LabelScheme LabelScheme::aami5() {
  return {ClassScheme::kAami5, 5, {"N", "S", "V", "F", "Q"}};
}

LabelScheme LabelScheme::plawiak17() {
  return {ClassScheme::kPlawiak17,
          17,
          {"NSR", "APB", "AFL", "AFIB", "SVTA", "WPW", "PVC", "Bigeminy", "Trigeminy", "VT", "IVR",
           "VFL", "Fusion", "LBBBB", "RBBBB", "SDHB", "PR"}};
}

LabelScheme LabelScheme::custom(std::size_t n_classes) {
  return {ClassScheme::kCustom, n_classes, {}};
}

LabelScheme LabelScheme::for_classes(std::size_t n_classes) {
  if (n_classes == 5) return aami5();
  if (n_classes == 17) return plawiak17();
  return custom(n_classes);
}

std::string LabelScheme::name(std::size_t id) const {
  return id < names.size() ? names[id] : std::to_string(id);
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(labels.n_classes, 0);
  for (const auto& s : segments) {
    if (s.label < counts.size()) ++counts[s.label];
  }
  return counts;
}

void Dataset::validate() const {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const EcgSegment& s = segments[i];
    if (s.samples.size() != length) {
      throw DimensionError("dataset: segment " + std::to_string(i) + " has " +
                           std::to_string(s.samples.size()) + " samples, expected " +
                           std::to_string(length));
    }
    if (s.label >= labels.n_classes) {
      throw InvalidLabelError("dataset: segment " + std::to_string(i) + " has label " +
                              std::to_string(s.label) + " outside [0, " +
                              std::to_string(labels.n_classes) + ")");
    }
    for (float v : s.samples) {
      if (!std::isfinite(v)) {
        throw InvalidValueError("dataset: segment " + std::to_string(i) + " has a non-finite sample");
      }
    }
  }
}

namespace {

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                               : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
      cell.remove_suffix(1);
    }
    cells.push_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_float(std::string_view cell, float& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(out);
}

bool parse_label(std::string_view cell, long long& out) {
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), out);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::size_t length, const LabelScheme& scheme) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Dataset data;
  data.labels = scheme;
  data.length = length;
  data.provenance = "csv:" + path.filename().string();

  std::string line;
  std::size_t row = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_cells(line);
    if (first_content) {
      first_content = false;
      float probe = 0;
      if (!cells.empty() && !parse_float(cells.front(), probe)) continue;  // header
    }
    if (cells.size() < 2) throw ParseError(row, "expected samples followed by a label");
    const std::size_t n = cells.size() - 1;
    if (data.length == 0) data.length = n;
    if (n != data.length) {
      throw ParseError(row, "has " + std::to_string(n) + " samples, expected " +
                                std::to_string(data.length));
    }
    EcgSegment seg;
    seg.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!parse_float(cells[i], seg.samples[i])) {
        throw ParseError(row, "column " + std::to_string(i + 1) + " is not a finite number: '" +
                                  std::string(cells[i]) + "'");
      }
    }
    long long label = 0;
    if (!parse_label(cells.back(), label)) {
      throw ParseError(row, "label '" + std::string(cells.back()) + "' is not an integer");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= scheme.n_classes) {
      throw ParseError(row, "label " + std::to_string(label) + " outside [0, " +
                                std::to_string(scheme.n_classes) + ")");
    }
    seg.label = static_cast<std::size_t>(label);
    data.segments.push_back(std::move(seg));
  }
  if (in.bad()) throw IoError("read failed: " + path.string());
  return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path, bool header) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  if (header) {
    for (std::size_t i = 0; i < data.length; ++i) out << 's' << i << ',';
    out << "label\n";
  }
  char buf[64];
  for (const EcgSegment& s : data.segments) {
    for (float v : s.samples) {
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, res.ptr - buf);
      out.put(',');
    }
    out << s.label << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<std::uint8_t> serialize_packed(const Dataset& data) {
  data.validate();
  detail::ByteWriter w;
  w.bytes(std::string_view("ECGS"));
  w.u8(kPackedDatasetVersion);
  w.u32(static_cast<std::uint32_t>(data.size()));
  w.u32(static_cast<std::uint32_t>(data.length));
  w.u8(static_cast<std::uint8_t>(data.labels.scheme));
  for (const EcgSegment& s : data.segments) {
    w.f32s(s.samples);
    w.u16(static_cast<std::uint16_t>(s.label));
  }
  w.crc();
  return w.take();
}

Dataset deserialize_packed(std::span<const std::uint8_t> bytes) {
  const std::string what = "packed dataset";
  detail::ByteReader r(bytes, what);
  const auto magic = r.bytes(4);
  if (!std::equal(magic.begin(), magic.end(), "ECGS")) {
    throw FormatError(FormatError::Kind::kBadMagic, what + ": bad magic");
  }
  const std::uint8_t version = r.u8();
  if (version != kPackedDatasetVersion) {
    throw FormatError(FormatError::Kind::kBadVersion,
                      what + ": unsupported version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32();
  const std::uint32_t length = r.u32();
  const std::uint8_t scheme_id = r.u8();
  if (scheme_id > static_cast<std::uint8_t>(ClassScheme::kPlawiak17)) {
    throw FormatError(FormatError::Kind::kInvalid, what + ": unknown scheme id");
  }
  const std::size_t expected = r.position() + static_cast<std::size_t>(count) * (length * 4ULL + 2) + 4;
  if (bytes.size() < expected) {
    throw FormatError(FormatError::Kind::kTruncated, what + ": truncated (" +
                                                         std::to_string(bytes.size()) + " of " +
                                                         std::to_string(expected) + " bytes)");
  }
  if (bytes.size() > expected) {
    throw FormatError(FormatError::Kind::kInvalid, what + ": trailing bytes after CRC");
  }
  detail::check_trailing_crc(bytes, what);

  Dataset data;
  data.length = length;
  data.provenance = "packed";
  std::size_t max_label = 0;
  data.segments.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    EcgSegment s;
    s.samples = r.f32s(length);
    s.label = r.u16();
    max_label = std::max(max_label, s.label);
    data.segments.push_back(std::move(s));
  }
  switch (static_cast<ClassScheme>(scheme_id)) {
    case ClassScheme::kAami5: data.labels = LabelScheme::aami5(); break;
    case ClassScheme::kPlawiak17: data.labels = LabelScheme::plawiak17(); break;
    case ClassScheme::kCustom: data.labels = LabelScheme::custom(count == 0 ? 0 : max_label + 1); break;
  }
  try {
    data.validate();
  } catch (const Error& e) {
    throw FormatError(FormatError::Kind::kInvalid, what + ": " + e.what());
  }
  return data;
}

void save_packed(const Dataset& data, const std::filesystem::path& path) {
  detail::write_file(path, serialize_packed(data));
}

Dataset load_packed(const std::filesystem::path& path) {
  Dataset d = deserialize_packed(detail::read_file(path));
  d.provenance = "packed:" + path.filename().string();
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, std::size_t length,
                     const LabelScheme& scheme) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string_view(magic, 4) == "ECGS") {
    Dataset d = load_packed(path);
    if (length != 0 && d.length != length) {
      throw DimensionError("dataset length " + std::to_string(d.length) + " != expected " +
                           std::to_string(length));
    }
    if (d.labels.n_classes > scheme.n_classes) {
      throw InvalidLabelError("dataset uses " + std::to_string(d.labels.n_classes) +
                              " classes, expected at most " + std::to_string(scheme.n_classes));
    }
    d.labels = scheme;
    return d;
  }
  return load_csv(path, length, scheme);
}

std::vector<float> standardize(std::span<const float> segment) {
  std::vector<float> out(segment.size(), 0.0F);
  if (segment.empty()) return out;
  double mean = 0.0;
  for (float v : segment) mean += v;
  mean /= static_cast<double>(segment.size());
  double var = 0.0;
  for (float v : segment) var += (v - mean) * (v - mean);
  var /= static_cast<double>(segment.size());
  const double sd = std::sqrt(var);
  if (!(sd > 0.0)) return out;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    out[i] = static_cast<float>((segment[i] - mean) / sd);
  }
  return out;
}

Dataset standardized(Dataset data) {
  for (EcgSegment& s : data.segments) s.samples = standardize(s.samples);
  return data;
}

Split split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidValueError("split: train fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n_classes =
      std::max<std::size_t>(data.labels.n_classes,
                            data.empty() ? 0
                                         : 1 + std::max_element(data.segments.begin(), data.segments.end(),
                                                                [](const auto& a, const auto& b) {
                                                                  return a.label < b.label;
                                                                })->label);
  std::vector<std::size_t> counts(n_classes, 0);
  for (const auto& s : data.segments) ++counts[s.label];
  std::vector<std::size_t> quota(n_classes, 0);
  Split out;
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) continue;
    if (counts[c] < 2) {
      quota[c] = counts[c];
      out.warnings.push_back("class " + data.labels.name(c) + " has " + std::to_string(counts[c]) +
                             " member(s); kept whole in the training set");
    } else {
      quota[c] = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(counts[c])));
    }
  }

  for (Dataset* d : {&out.train, &out.test}) {
    d->labels = data.labels;
    d->length = data.length;
    d->provenance = data.provenance;
  }
  std::vector<std::size_t> taken(n_classes, 0);
  for (std::size_t idx : order) {
    const EcgSegment& s = data.segments[idx];
    if (taken[s.label] < quota[s.label]) {
      ++taken[s.label];
      out.train.segments.push_back(s);
    } else {
      out.test.segments.push_back(s);
    }
  }
  return out;
}

Dataset synth_dataset(const LabelScheme& scheme, std::size_t n_per_class, std::size_t length,
                      double noise_sigma, std::uint64_t seed) {
  Dataset data;
  data.labels = scheme;
  data.length = length;
  std::ostringstream prov;
  prov << "synthetic(classes=" << scheme.n_classes << ", per_class=" << n_per_class
       << ", length=" << length << ", noise=" << noise_sigma << ", seed=" << seed << ")";
  data.provenance = prov.str();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t c = 0; c < scheme.n_classes; ++c) {
    const double period = 20.0 + 7.0 * static_cast<double>(c);
    const double width = 1.5 + 1.5 * static_cast<double>(c % 3);
    const double alternate = c % 2 == 1 ? 0.5 : 1.0;
    const double polarity = c % 4 == 3 ? -1.0 : 1.0;
    const double phase = std::fmod(5.0 * static_cast<double>(c), period);
    std::vector<double> clean(length, 0.0);
    for (std::size_t t = 0; t < length; ++t) {
      const double tt = static_cast<double>(t);
      double v = 0.1 * std::sin(2.0 * std::numbers::pi * tt / (3.0 * period));
      const double j_lo = std::floor((tt - phase) / period) - 1.0;
      for (double j = std::max(0.0, j_lo); j <= j_lo + 3.0; j += 1.0) {
        const double centre = phase + j * period;
        const double amp = static_cast<long long>(j) % 2 == 1 ? alternate : 1.0;
        const double d = tt - centre;
        v += polarity * amp * std::exp(-d * d / (2.0 * width * width));
      }
      clean[t] = v;
    }
    for (std::size_t i = 0; i < n_per_class; ++i) {
      EcgSegment s;
      s.label = c;
      s.samples.resize(length);
      for (std::size_t t = 0; t < length; ++t) {
        s.samples[t] = static_cast<float>(clean[t] + (noise_sigma > 0.0 ? noise_sigma * noise(rng) : 0.0));
      }
      data.segments.push_back(std::move(s));
    }
  }
  return data;
}

}  // namespace ecgbnn
