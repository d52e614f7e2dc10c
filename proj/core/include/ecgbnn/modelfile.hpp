#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "ecgbnn/model.hpp"
#include "ecgbnn/train.hpp"

namespace ecgbnn {

// Deployment file ("BECG"):
//   header  magic, version u8, mode u8, n_blocks u8, n_classes u16,
//           input_length u32, then per block Cin u16, Cout u16, K u8,
//           stride u8, padding u8, pad value i8, pool size u8, pool stride u8
//   payload per block:
//           packed weights, out/in/tap order, LSB-first, one bit stream per
//           block padded to a whole byte
//           blocks followed by a Sign: one direction nibble per channel
//           (pos in bits 0-1, neg in bits 2-3, even channel in the low
//           nibble), then the threshold of every non-constant branch:
//           integer domains as w-bit two's complement with
//           w = bit_width(Cin*K) + 1, padded to a byte; real domains f32
//           last block: k, b, a as f32 per channel
//   CRC32 over every preceding byte
// Multi-byte values are little-endian.
inline constexpr std::uint8_t kModelFormatVersion = 1;
inline constexpr std::uint8_t kCheckpointFormatVersion = 1;

struct BlockSectionSize {
  std::size_t weight_bits = 0;
  std::size_t weight_bytes = 0;
  std::size_t direction_bytes = 0;
  std::size_t threshold_value_bytes = 0;  // thresholds or affine triples
};

struct ModelLayout {
  std::size_t header_bytes = 0;
  std::vector<BlockSectionSize> blocks;
  std::size_t crc_bytes = 4;

  std::size_t weight_bytes() const;
  std::size_t threshold_bytes() const;  // directions + thresholds + affine
  std::size_t payload_bytes() const { return weight_bytes() + threshold_bytes(); }
  std::size_t file_bytes() const { return header_bytes + payload_bytes() + crc_bytes; }
};

// Threshold width in bits for an integer domain bound.
std::size_t threshold_bits(std::int32_t bound);

ModelLayout model_layout(const FusedModel& model);

std::vector<std::uint8_t> serialize_model(const FusedModel& model);
// Checks magic, then version, then the CRC, then parses. FormatError on any
// violation.
FusedModel deserialize_model(std::span<const std::uint8_t> bytes);
// Returns the number of bytes written.
std::size_t save_model(const FusedModel& model, const std::filesystem::path& path);
FusedModel load_model(const std::filesystem::path& path);

// Training checkpoint ("BECK"): net and train configs, completed epochs,
// history, RNG state, latent parameters with running statistics and the
// optimizer moments, then CRC32.
std::vector<std::uint8_t> serialize_checkpoint(const TrainingState& state);
TrainingState deserialize_checkpoint(std::span<const std::uint8_t> bytes);
std::size_t save_checkpoint(const TrainingState& state, const std::filesystem::path& path);
TrainingState load_checkpoint(const std::filesystem::path& path);

}  // namespace ecgbnn
