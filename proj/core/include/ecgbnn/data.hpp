#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ecgbnn {

enum class ClassScheme : std::uint8_t {
  kCustom = 0,
  kAami5 = 1,      // N, S, V, F, Q
  kPlawiak17 = 2,  // 17 rhythm classes of 10 s MLII segments
};

struct LabelScheme {
  ClassScheme scheme = ClassScheme::kCustom;
  std::size_t n_classes = 0;
  std::vector<std::string> names;  // empty for custom schemes

  static LabelScheme aami5();
  static LabelScheme plawiak17();
  static LabelScheme custom(std::size_t n_classes);
  // 5 -> AAMI5, 17 -> PLAWIAK17, anything else custom.
  static LabelScheme for_classes(std::size_t n_classes);

  // Class name, or the numeric id when the scheme has no names.
  std::string name(std::size_t id) const;

  friend bool operator==(const LabelScheme&, const LabelScheme&) = default;
};

// One single-lead record, e.g. 10 s of MLII at 360 Hz (3600 samples).
struct EcgSegment {
  std::vector<float> samples;
  std::size_t label = 0;

  friend bool operator==(const EcgSegment&, const EcgSegment&) = default;
};

struct Dataset {
  std::vector<EcgSegment> segments;
  LabelScheme labels;
  std::size_t length = 0;
  std::string provenance;

  std::size_t size() const noexcept { return segments.size(); }
  bool empty() const noexcept { return segments.empty(); }
  std::vector<std::size_t> class_counts() const;

  // Equal lengths, finite samples, labels inside the scheme.
  void validate() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.segments == b.segments && a.labels == b.labels && a.length == b.length;
  }
};

// One segment per row: `length` comma-separated samples then an integer
// label. A header row (`s0,...,s{L-1},label`) is skipped when present.
// length == 0 takes the length from the first data row. Errors carry the
// 1-based line number (ParseError).
Dataset load_csv(const std::filesystem::path& path, std::size_t length, const LabelScheme& scheme);
void save_csv(const Dataset& data, const std::filesystem::path& path, bool header = true);

// Packed segment file: "ECGS", version u8, u32 count, u32 length, u8 scheme
// id, then per segment length x f32 + u16 label, then CRC32. Little-endian.
inline constexpr std::uint8_t kPackedDatasetVersion = 1;
std::vector<std::uint8_t> serialize_packed(const Dataset& data);
Dataset deserialize_packed(std::span<const std::uint8_t> bytes);
void save_packed(const Dataset& data, const std::filesystem::path& path);
Dataset load_packed(const std::filesystem::path& path);

// Sniffs the "ECGS" magic; anything else is read as CSV.
Dataset load_dataset(const std::filesystem::path& path, std::size_t length,
                     const LabelScheme& scheme);

// Per-segment z-score with the population standard deviation. Constant
// segments map to all zeros.
std::vector<float> standardize(std::span<const float> segment);
Dataset standardized(Dataset data);

struct Split {
  Dataset train;
  Dataset test;
  std::vector<std::string> warnings;
};

// Seeded shuffle, then per class the first round(fraction * count) members
// go to train. Classes with fewer than two members stay whole in train and
// are reported in `warnings`.
Split split(const Dataset& data, double train_fraction, std::uint64_t seed);

// Desk-scale stand-in for real recordings: each class is a fixed
// quasi-periodic spike train (class-specific rate, width, polarity and
// alternating amplitude) plus seeded Gaussian noise.
Dataset synth_dataset(const LabelScheme& scheme, std::size_t n_per_class, std::size_t length,
                      double noise_sigma, std::uint64_t seed);

}  // namespace ecgbnn
