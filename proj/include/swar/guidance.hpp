#pragma once

// Guidance schemes operating on raw logits: classifier-free guidance in its
// extrapolation and nudge forms, attention-weighted (information-grounding)
// guidance, its sliding-window variant, and the CFG+IGG mixture.

#include <cstddef>
#include <span>
#include <vector>

#include "swar/core.hpp"

namespace swar {

/// Row-stochastic n x n matrix over flattened grid positions.
class AttentionMatrix {
 public:
  AttentionMatrix(std::size_t n, std::vector<double> values);
  static AttentionMatrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  double at(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(values_).subspan(i * n_, n_); }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

/// Side length of the 2-D attention window at a given scale.
struct WindowRule {
  enum class Kind { sqrt_area, fixed };

  Kind kind = Kind::sqrt_area;
  int fixed_size = 1;

  /// sqrt_area: round(sqrt(h * w)), at least 1.
  int window(GridShape shape) const;
};

struct GuidanceScheme {
  SchemeKind kind = SchemeKind::none;
  WindowRule window;
};

/// gamma * (cond - uncond), elementwise.
GuidanceField nudge(const LogitTensor& uncond, const LogitTensor& cond, double gamma);

/// (1 + lambda) * cond - lambda * uncond.
LogitTensor cfg_guide(const LogitTensor& uncond, const LogitTensor& cond, double lambda);

/// uncond + field.
LogitTensor apply_field(const LogitTensor& uncond, const GuidanceField& field);

/// Row-wise softmax of G G^T / sqrt(|V|) where G is the flattened field.
/// `vocab` sets the temperature and need not equal the field's own width.
AttentionMatrix attention_weights(const GuidanceField& field, VocabSpec vocab);

/// As attention_weights, but scores between positions whose Chebyshev grid
/// distance exceeds window / 2 are masked out before the softmax.
AttentionMatrix attention_weights_windowed(const GuidanceField& field, VocabSpec vocab, int window);

/// A * F over flattened grid rows.
GuidanceField attend(const AttentionMatrix& attention, const GuidanceField& field);

LogitTensor igg_guide(const LogitTensor& uncond, const LogitTensor& cond, double gamma, VocabSpec vocab);

LogitTensor igg_guide_windowed(const LogitTensor& uncond, const LogitTensor& cond, double gamma, VocabSpec vocab,
                               const WindowRule& rule);

/// uncond + gamma * (cond - uncond) + A(F') F' with F' = gamma_prime * (cond - uncond).
/// gamma_prime = 0 leaves the pure CFG nudge form; gamma = 0 gives igg_guide(gamma_prime).
LogitTensor mixed_guide(const LogitTensor& uncond, const LogitTensor& cond, double gamma, double gamma_prime,
                        VocabSpec vocab);

struct GuidedLogits {
  LogitTensor logits;
  /// What the scheme added on top of the unconditional logits.
  GuidanceField field;
};

/// Applies `scheme` at step k of `schedule`. The none scheme returns the
/// conditional logits and records the unit nudge cond - uncond.
GuidedLogits guide(const GuidanceScheme& scheme, const ScaleSchedule& schedule, std::size_t k,
                   const LogitTensor& uncond, const LogitTensor& cond);

}  // namespace swar
