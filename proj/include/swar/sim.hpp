#pragma once

// Model side of the sampler: logit oracles (a synthetic scene generator and
// a replay of recorded dumps), the per-step token sampler and the
// scale-by-scale sampling loop.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "swar/core.hpp"
#include "swar/guidance.hpp"
#include "swar/io.hpp"
#include "swar/rng.hpp"

namespace swar {

/// Source of per-scale logits. Implementations must be deterministic in
/// (k, history, condition) and safe to share read-only between threads.
class ModelOracle {
 public:
  virtual ~ModelOracle() = default;

  virtual VocabSpec vocab() const = 0;
  virtual std::vector<GridShape> scales() const = 0;
  /// Conditional logits when `condition` is set, unconditional otherwise.
  virtual LogitTensor next_logits(std::size_t k, std::span<const TokenMap> history,
                                  std::optional<std::uint32_t> condition) const = 0;
};

/// Foreground region in unit coordinates (y down, x right). For disks the
/// radius is `extent_y`; rectangles use both half-extents.
struct SceneShape {
  enum class Kind { rectangle, disk };

  Kind kind = Kind::disk;
  double center_y = 0.5;
  double center_x = 0.5;
  double extent_y = 0.25;
  double extent_x = 0.25;

  bool contains(double y, double x) const;
};

/// Alternating disks and rectangles with class-dependent placement.
std::vector<SceneShape> default_shapes(std::uint32_t classes);

struct SceneOracleConfig {
  VocabSpec vocab{64};
  std::vector<GridShape> scales = default_schedule(0.0).steps();
  std::uint32_t classes = 4;
  /// One per class; empty selects default_shapes(classes).
  std::vector<SceneShape> shapes;
  /// Logit boost of class tokens inside the class region.
  double contrast = 0.5;
  /// Gaussian blur width (in cells) applied to the class-averaged part of the
  /// unconditional logits.
  double smoothness = 1.0;
  /// Scale of the class-specific response texture, relative to contrast.
  double texture = 0.6;
  /// Log-normal spread of the per-cell texture amplitude.
  double texture_spread = 0.5;
  std::uint64_t seed = 0;
};

/// Synthetic stand-in for a trained model. Class c owns the token ids with
/// id % classes == c. Conditional logits are
///   base + contrast * ( [cell in region c] [token owned by c] + amplitude * texture_c ),
/// and unconditional logits replace the bracketed term by its Gaussian-blurred
/// average over classes. A class region is the set of cells whose centres
/// lie inside its shape. Values are rounded to f32 so dumps replay exactly.
class SceneOracle final : public ModelOracle {
 public:
  explicit SceneOracle(SceneOracleConfig config);

  const SceneOracleConfig& config() const noexcept { return config_; }

  VocabSpec vocab() const override { return config_.vocab; }
  std::vector<GridShape> scales() const override { return config_.scales; }
  LogitTensor next_logits(std::size_t k, std::span<const TokenMap> history,
                          std::optional<std::uint32_t> condition) const override;

  /// Region of `condition` rasterised at grid `shape`.
  SegMask region(std::uint32_t condition, GridShape shape) const;
  /// Region at the final scale, the analogue of a segmentation of the output.
  SegMask foreground_mask(std::uint32_t condition) const;

 private:
  SceneOracleConfig config_;
};

LogitTensor scene_logits(const SceneOracleConfig& config, std::size_t k, std::optional<std::uint32_t> condition);

/// Serves the tensors of a recorded dump. History is ignored; any condition
/// id selects the conditional tensor.
class ReplayOracle final : public ModelOracle {
 public:
  explicit ReplayOracle(LogitDump dump);

  const LogitDump& dump() const noexcept { return dump_; }

  VocabSpec vocab() const override { return dump_.vocab; }
  std::vector<GridShape> scales() const override { return dump_.scales(); }
  LogitTensor next_logits(std::size_t k, std::span<const TokenMap> history,
                          std::optional<std::uint32_t> condition) const override;

 private:
  LogitDump dump_;
};

ReplayOracle replay_oracle(const std::filesystem::path& path);

/// Records both logit tensors of every step of `oracle` for `condition`.
LogitDump record_dump(const ModelOracle& oracle, std::uint32_t condition);

struct SamplerConfig {
  GuidanceScheme scheme;
  ScaleSchedule schedule = default_schedule(0.0);
  double temperature = 1.0;
  std::optional<std::uint32_t> top_k;
  std::uint64_t seed = 0;
};

/// Temperatures below this sample the argmax.
inline constexpr double kGreedyTemperature = 1e-6;

/// Independent categorical draw per position from softmax(logits / T),
/// restricted to the top_k ids when set. Ties resolve to the lower id.
TokenMap sample_step(const LogitTensor& logits, const SamplerConfig& config, Rng& rng);

/// Samples every scale, applying the configured scheme and recording the
/// guidance field and evenness of each step. Divergence needs a mask and is
/// filled in separately by score_divergence.
RunRecord run_sampling(const ModelOracle& oracle, const SamplerConfig& config, std::uint32_t condition);

}  // namespace swar
