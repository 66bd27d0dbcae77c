#pragma once

// File formats. All multi-byte fields are little-endian regardless of host.
//
// Logit dump ("SWARLOG1"):
//   magic[8] | u32 vocab | u32 K | K x ( u32 h | u32 w | f32[h*w*vocab] cond | f32[h*w*vocab] uncond )
//
// Run record ("SWARRUN1"):
//   magic[8] | u8 scheme | u8 schedule kind | u8 has w' | u8 0 | f64 w | f64 w' | u32 K | K x (u32 h | u32 w)
//   | u32 vocab | u32 condition | u64 seed
//   | K x ( u32[h*w] tokens | f64[h*w*vocab] field | u8 flags | f64 evenness | f64 divergence )
//   | u8 flags | f64 evenness | f64 divergence
//   flags: bit 0 = evenness present, bit 1 = divergence present; absent scores are written as 0.
//
// Masks: binary PGM (P5, pixel > 127 is foreground) or ASCII PBM (P1, 1 is foreground).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swar/core.hpp"

namespace swar {

struct LogitDumpStep {
  LogitTensor conditional;
  LogitTensor unconditional;

  bool operator==(const LogitDumpStep&) const = default;
};

struct LogitDump {
  VocabSpec vocab;
  std::vector<LogitDumpStep> steps;

  std::vector<GridShape> scales() const;
  bool operator==(const LogitDump&) const = default;
};

using Bytes = std::vector<std::uint8_t>;

/// Values are narrowed to f32; tensors holding f32-representable values
/// round-trip exactly.
Bytes encode_dump(const LogitDump& dump);
LogitDump decode_dump(std::span<const std::uint8_t> bytes);
void write_dump(const std::filesystem::path& path, const LogitDump& dump);
LogitDump read_dump(const std::filesystem::path& path);

Bytes encode_run(const RunRecord& run);
RunRecord decode_run(std::span<const std::uint8_t> bytes);
void write_run(const std::filesystem::path& path, const RunRecord& run);
RunRecord read_run(const std::filesystem::path& path);

SegMask parse_mask(std::span<const std::uint8_t> bytes, std::optional<GridShape> expected = std::nullopt);
SegMask read_mask(const std::filesystem::path& path, std::optional<GridShape> expected = std::nullopt);
/// Writes P5 with foreground = 255, background = 0.
void write_mask(const std::filesystem::path& path, const SegMask& mask);

/// Per-step guidance norms as CSV (one line per grid row, 6 significant
/// digits) and as an 8-bit PGM scaled min -> 0, max -> 255 (a flat step maps
/// to 128), for every step k >= 1, plus annotations.txt with the scores.
/// Returns the written paths.
std::vector<std::filesystem::path> export_heatmaps(const RunRecord& run, const std::filesystem::path& dir);

/// Parses a heatmap CSV back into row-major values.
std::vector<double> read_heatmap_csv(const std::filesystem::path& path, GridShape* shape = nullptr);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace swar
