#pragma once

// Shared value types: vocabularies, scale schedules, per-scale logit grids,
// token maps, segmentation masks and the record of one sampling run.
//
// Grids are flattened row-major (left-to-right, top-to-bottom); a tensor row
// holds the |V| entries of one grid position contiguously.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "swar/error.hpp"

namespace swar {

class VocabSpec {
 public:
  explicit VocabSpec(std::size_t size);

  std::size_t size() const noexcept { return size_; }
  bool operator==(const VocabSpec&) const = default;

 private:
  std::size_t size_;
};

struct GridShape {
  int height = 1;
  int width = 1;

  std::size_t positions() const noexcept {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  bool operator==(const GridShape&) const = default;
};

enum class ScheduleKind { ratio, fixed };

std::string_view schedule_kind_name(ScheduleKind kind) noexcept;
std::optional<ScheduleKind> parse_schedule_kind(std::string_view name) noexcept;

/// Grid sizes per step together with the guidance weights that produce the
/// per-step scales.
///
/// Ratio schedules ramp linearly over k = 0..K-1, lambda_k = w * k / (K - 1),
/// so lambda_0 = 0 and lambda_{K-1} = w. Fixed schedules hold gamma_k = w.
/// In both cases gamma_k = 1 + lambda_k.
class ScaleSchedule {
 public:
  ScaleSchedule(std::vector<GridShape> steps, double weight, ScheduleKind kind = ScheduleKind::ratio,
                std::optional<double> secondary_weight = std::nullopt);

  std::size_t size() const noexcept { return steps_.size(); }
  const std::vector<GridShape>& steps() const noexcept { return steps_; }
  const GridShape& step(std::size_t k) const { return steps_.at(k); }
  const GridShape& final_step() const noexcept { return steps_.back(); }

  double weight() const noexcept { return weight_; }
  std::optional<double> secondary_weight() const noexcept { return secondary_weight_; }
  ScheduleKind kind() const noexcept { return kind_; }

  double lambda(std::size_t k) const;
  double gamma(std::size_t k) const;
  /// Scale of the attention-weighted term in the mixed scheme: w' * k/(K-1)
  /// for ratio schedules, w' for fixed ones. Zero when no w' was given.
  double secondary_gamma(std::size_t k) const;

  bool operator==(const ScaleSchedule&) const = default;

 private:
  double ramp(double weight, std::size_t k) const;

  std::vector<GridShape> steps_;
  double weight_;
  ScheduleKind kind_;
  std::optional<double> secondary_weight_;
};

/// Side lengths 1, 2, 4, 6, 8, 12 on square grids.
ScaleSchedule default_schedule(double weight, ScheduleKind kind = ScheduleKind::ratio,
                               std::optional<double> secondary_weight = std::nullopt);

/// Row-major (positions x |V|) grid of reals. The tag keeps logits and
/// guidance fields from being mixed up at call sites.
template <class Tag>
class GridTensor {
 public:
  GridTensor(GridShape shape, VocabSpec vocab, std::vector<double> values);

  static GridTensor zeros(GridShape shape, VocabSpec vocab) {
    return GridTensor(shape, vocab, std::vector<double>(shape.positions() * vocab.size(), 0.0));
  }

  GridShape shape() const noexcept { return shape_; }
  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }
  std::size_t positions() const noexcept { return shape_.positions(); }
  VocabSpec vocab() const noexcept { return vocab_; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> row(std::size_t position) const {
    return std::span<const double>(values_).subspan(position * vocab_.size(), vocab_.size());
  }
  double at(std::size_t position, std::size_t token) const { return values_[position * vocab_.size() + token]; }

  /// Index of the first non-finite entry, if any.
  std::optional<std::size_t> first_non_finite() const noexcept;

  bool operator==(const GridTensor&) const = default;

 private:
  GridShape shape_;
  VocabSpec vocab_;
  std::vector<double> values_;
};

struct LogitTag {};
struct GuidanceTag {};

using LogitTensor = GridTensor<LogitTag>;
/// Signed per-position nudge applied on top of the unconditional logits.
using GuidanceField = GridTensor<GuidanceTag>;

extern template class GridTensor<LogitTag>;
extern template class GridTensor<GuidanceTag>;

class TokenMap {
 public:
  TokenMap(GridShape shape, std::vector<std::uint32_t> tokens, VocabSpec vocab);

  GridShape shape() const noexcept { return shape_; }
  std::span<const std::uint32_t> tokens() const noexcept { return tokens_; }
  std::uint32_t at(int r, int c) const { return tokens_[static_cast<std::size_t>(r) * shape_.width + c]; }

  bool operator==(const TokenMap&) const = default;

 private:
  GridShape shape_;
  std::vector<std::uint32_t> tokens_;
};

/// Binary segmentation; true marks a foreground (semantically important) cell.
class SegMask {
 public:
  SegMask(GridShape shape, std::vector<std::uint8_t> bits);
  static SegMask filled(GridShape shape, bool value);

  GridShape shape() const noexcept { return shape_; }
  int height() const noexcept { return shape_.height; }
  int width() const noexcept { return shape_.width; }
  bool at(int r, int c) const { return bits_[static_cast<std::size_t>(r) * shape_.width + c] != 0; }
  bool at(std::size_t position) const { return bits_[position] != 0; }
  std::span<const std::uint8_t> bits() const noexcept { return bits_; }
  std::size_t foreground_count() const noexcept;

  bool operator==(const SegMask&) const = default;

 private:
  GridShape shape_;
  std::vector<std::uint8_t> bits_;
};

enum class SchemeKind : std::uint8_t { none = 0, cfg = 1, igg = 2, mixed = 3, igg_windowed = 4 };

std::string_view scheme_kind_name(SchemeKind kind) noexcept;
std::optional<SchemeKind> parse_scheme_kind(std::string_view name) noexcept;

struct StepRecord {
  TokenMap token_map;
  GuidanceField field;
  std::optional<double> evenness;
  std::optional<double> divergence;

  bool operator==(const StepRecord&) const = default;
};

struct RunRecord {
  ScaleSchedule schedule;
  SchemeKind scheme = SchemeKind::none;
  std::uint32_t condition_id = 0;
  std::uint64_t seed = 0;
  std::vector<StepRecord> steps;
  std::optional<double> evenness;
  std::optional<double> divergence;

  VocabSpec vocab() const { return steps.at(0).field.vocab(); }
  bool operator==(const RunRecord&) const = default;
};

/// Throws unless the record has one entry per schedule step, each matching
/// its scheduled shape, and every present score lies in [0, 1].
void validate_run(const RunRecord& run);

/// Throws shape-mismatch or non-finite-value, naming the offending tensor.
void validate_pair(const LogitTensor& uncond, const LogitTensor& cond);

}  // namespace swar
