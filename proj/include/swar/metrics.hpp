#pragma once

// Diagnostics for how guidance spreads over a token map: Pielou evenness of
// the per-position guidance strength, Jensen-Shannon distance, and the
// foreground/background divergence score.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "swar/core.hpp"

namespace swar {

/// Probability vector over n outcomes.
class TokenGuidanceDist {
 public:
  explicit TokenGuidanceDist(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

 private:
  std::vector<double> probs_;
};

/// L2 norm of each position's nudge across the vocabulary axis.
std::vector<double> position_norms(const GuidanceField& field);

/// position_norms normalised to sum 1. Throws all-zero-field when no position
/// carries guidance.
TokenGuidanceDist guidance_magnitudes(const GuidanceField& field);

/// Shannon entropy (nats) divided by ln(n). Throws single-token-map for n = 1.
double pielou_evenness(const TokenGuidanceDist& dist);

/// Jensen-Shannon distance with base-2 logarithms, in [0, 1].
double jsd(const TokenGuidanceDist& p, const TokenGuidanceDist& q);

/// Area-weighted downsampling: an output cell is foreground iff at least half
/// of its source rectangle is.
SegMask downsample_mask(const SegMask& mask, int height, int width);

struct DivergenceOptions {
  /// Equal-width bins over [0, max norm of the step] used to compare the
  /// foreground and resampled-background guidance strengths.
  int bins = 16;
};

struct StepDivergence {
  std::size_t step = 0;
  /// Absent when the downsampled mask has no foreground or no background cell.
  std::optional<double> divergence;
};

/// Per-step divergences for steps 1..K-1; step 0 is never scored.
///
/// At step k the mask is downsampled to the step grid. The guided
/// distribution is the histogram of foreground guidance norms; the unguided
/// one is the histogram of h*w norms drawn with replacement from background
/// positions. Both histograms share bins and are compared with jsd().
std::vector<StepDivergence> divergence_steps(const RunRecord& run, const SegMask& mask, std::uint64_t seed,
                                             const DivergenceOptions& options = {});

/// Resolution-weighted mean of divergence_steps over the steps that could be
/// scored. Throws empty-foreground / empty-background for a degenerate mask
/// and when no step had both regions.
double divergence_score(const RunRecord& run, const SegMask& mask, std::uint64_t seed,
                        const DivergenceOptions& options = {});

struct StepScores {
  std::size_t step = 0;
  std::optional<double> evenness;
  std::optional<double> divergence;
  double weight = 0.0;
};

struct AggregateScores {
  std::optional<double> evenness;
  std::optional<double> divergence;
};

/// Sum(weight * score) / Sum(weight) per metric over steps carrying that
/// score; step 0 is excluded. Throws no-scored-steps when neither metric has
/// a single scored step.
AggregateScores weighted_mean_scores(std::span<const StepScores> steps);

/// Evenness per step (absent for step 0, single-cell grids and all-zero fields).
std::optional<double> step_evenness(std::size_t k, const GuidanceField& field);

/// Fills per-step divergences and the aggregate divergence of `run`.
void score_divergence(RunRecord& run, const SegMask& mask, std::uint64_t seed, const DivergenceOptions& options = {});

/// Recomputes the aggregate evenness and divergence from the per-step values.
void refresh_aggregates(RunRecord& run);

}  // namespace swar
