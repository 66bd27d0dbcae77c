#include "swar/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace swar {

VocabSpec::VocabSpec(std::size_t size) : size_(size) {
  if (size < 2) {
    throw Error(Errc::invalid_argument, "vocabulary size must be at least 2, got " + std::to_string(size));
  }
}

std::string_view schedule_kind_name(ScheduleKind kind) noexcept {
  return kind == ScheduleKind::ratio ? "ratio" : "fixed";
}

std::optional<ScheduleKind> parse_schedule_kind(std::string_view name) noexcept {
  if (name == "ratio") return ScheduleKind::ratio;
  if (name == "fixed") return ScheduleKind::fixed;
  return std::nullopt;
}

ScaleSchedule::ScaleSchedule(std::vector<GridShape> steps, double weight, ScheduleKind kind,
                             std::optional<double> secondary_weight)
    : steps_(std::move(steps)), weight_(weight), kind_(kind), secondary_weight_(secondary_weight) {
  if (steps_.empty()) {
    throw Error(Errc::invalid_argument, "schedule needs at least one step");
  }
  if (!std::isfinite(weight_) || (secondary_weight_ && !std::isfinite(*secondary_weight_))) {
    throw Error(Errc::invalid_argument, "guidance weights must be finite");
  }
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    if (steps_[k].height < 1 || steps_[k].width < 1) {
      throw Error(Errc::invalid_dims, "step " + std::to_string(k) + " has a non-positive side");
    }
    if (k > 0 && steps_[k].positions() < steps_[k - 1].positions()) {
      throw Error(Errc::invalid_argument, "step resolutions must be non-decreasing (step " + std::to_string(k) + ")");
    }
  }
}

double ScaleSchedule::ramp(double weight, std::size_t k) const {
  if (k >= steps_.size()) {
    throw Error(Errc::invalid_argument, "step index " + std::to_string(k) + " out of range");
  }
  if (steps_.size() == 1) return 0.0;
  if (k + 1 == steps_.size()) return weight;
  return weight * static_cast<double>(k) / static_cast<double>(steps_.size() - 1);
}

double ScaleSchedule::lambda(std::size_t k) const {
  if (kind_ == ScheduleKind::fixed) {
    ramp(0.0, k);  // range check
    return weight_ - 1.0;
  }
  return ramp(weight_, k);
}

double ScaleSchedule::gamma(std::size_t k) const {
  if (kind_ == ScheduleKind::fixed) {
    ramp(0.0, k);
    return weight_;
  }
  return 1.0 + lambda(k);
}

double ScaleSchedule::secondary_gamma(std::size_t k) const {
  const double w2 = secondary_weight_.value_or(0.0);
  if (kind_ == ScheduleKind::fixed) {
    ramp(0.0, k);
    return w2;
  }
  return ramp(w2, k);
}

ScaleSchedule default_schedule(double weight, ScheduleKind kind, std::optional<double> secondary_weight) {
  std::vector<GridShape> steps;
  for (int side : {1, 2, 4, 6, 8, 12}) steps.push_back({side, side});
  return ScaleSchedule(std::move(steps), weight, kind, secondary_weight);
}

template <class Tag>
GridTensor<Tag>::GridTensor(GridShape shape, VocabSpec vocab, std::vector<double> values)
    : shape_(shape), vocab_(vocab), values_(std::move(values)) {
  if (shape_.height < 1 || shape_.width < 1) {
    throw Error(Errc::invalid_dims, "grid sides must be positive");
  }
  if (values_.size() != shape_.positions() * vocab_.size()) {
    throw Error(Errc::shape_mismatch, "expected " + std::to_string(shape_.positions() * vocab_.size()) +
                                          " values for a " + std::to_string(shape_.height) + "x" +
                                          std::to_string(shape_.width) + "x" + std::to_string(vocab_.size()) +
                                          " tensor, got " + std::to_string(values_.size()));
  }
}

template <class Tag>
std::optional<std::size_t> GridTensor<Tag>::first_non_finite() const noexcept {
  auto it = std::find_if(values_.begin(), values_.end(), [](double v) { return !std::isfinite(v); });
  if (it == values_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - values_.begin());
}

template class GridTensor<LogitTag>;
template class GridTensor<GuidanceTag>;

TokenMap::TokenMap(GridShape shape, std::vector<std::uint32_t> tokens, VocabSpec vocab)
    : shape_(shape), tokens_(std::move(tokens)) {
  if (tokens_.size() != shape_.positions()) {
    throw Error(Errc::shape_mismatch, "token map holds " + std::to_string(tokens_.size()) + " tokens, expected " +
                                          std::to_string(shape_.positions()));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] >= vocab.size()) {
      throw Error(Errc::invalid_argument, "token " + std::to_string(tokens_[i]) + " at position " +
                                              std::to_string(i) + " outside vocabulary of size " +
                                              std::to_string(vocab.size()));
    }
  }
}

SegMask::SegMask(GridShape shape, std::vector<std::uint8_t> bits) : shape_(shape), bits_(std::move(bits)) {
  if (shape_.height < 1 || shape_.width < 1) {
    throw Error(Errc::invalid_dims, "mask sides must be positive");
  }
  if (bits_.size() != shape_.positions()) {
    throw Error(Errc::shape_mismatch, "mask holds " + std::to_string(bits_.size()) + " cells, expected " +
                                          std::to_string(shape_.positions()));
  }
  for (auto& b : bits_) b = b ? 1 : 0;
}

SegMask SegMask::filled(GridShape shape, bool value) {
  return SegMask(shape, std::vector<std::uint8_t>(shape.positions(), value ? 1 : 0));
}

std::size_t SegMask::foreground_count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string_view scheme_kind_name(SchemeKind kind) noexcept {
  switch (kind) {
    case SchemeKind::none: return "none";
    case SchemeKind::cfg: return "cfg";
    case SchemeKind::igg: return "igg";
    case SchemeKind::mixed: return "mixed";
    case SchemeKind::igg_windowed: return "igg-window";
  }
  return "none";
}

std::optional<SchemeKind> parse_scheme_kind(std::string_view name) noexcept {
  for (auto kind : {SchemeKind::none, SchemeKind::cfg, SchemeKind::igg, SchemeKind::mixed, SchemeKind::igg_windowed}) {
    if (scheme_kind_name(kind) == name) return kind;
  }
  return std::nullopt;
}

namespace {

bool in_unit_interval(std::optional<double> v) { return !v || (*v >= 0.0 && *v <= 1.0); }

}  // namespace

void validate_run(const RunRecord& run) {
  if (run.steps.size() != run.schedule.size()) {
    throw Error(Errc::schedule_mismatch, "run holds " + std::to_string(run.steps.size()) + " steps, schedule has " +
                                             std::to_string(run.schedule.size()));
  }
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    const auto& step = run.steps[k];
    if (step.token_map.shape() != run.schedule.step(k) || step.field.shape() != run.schedule.step(k)) {
      throw Error(Errc::shape_mismatch, "step " + std::to_string(k) + " does not match its scheduled grid");
    }
    if (step.field.vocab() != run.steps[0].field.vocab()) {
      throw Error(Errc::shape_mismatch, "step " + std::to_string(k) + " changes vocabulary size");
    }
    if (auto bad = step.field.first_non_finite()) {
      throw Error(Errc::non_finite_value, "guidance field of step " + std::to_string(k) + " has a non-finite value at index " +
                                              std::to_string(*bad));
    }
    if (!in_unit_interval(step.evenness) || !in_unit_interval(step.divergence)) {
      throw Error(Errc::invalid_argument, "step " + std::to_string(k) + " score outside [0, 1]");
    }
  }
  if (!in_unit_interval(run.evenness) || !in_unit_interval(run.divergence)) {
    throw Error(Errc::invalid_argument, "aggregate score outside [0, 1]");
  }
}

void validate_pair(const LogitTensor& uncond, const LogitTensor& cond) {
  if (uncond.shape() != cond.shape() || uncond.vocab() != cond.vocab()) {
    throw Error(Errc::shape_mismatch,
                "conditional tensor is " + std::to_string(cond.height()) + "x" + std::to_string(cond.width()) + "x" +
                    std::to_string(cond.vocab().size()) + " but unconditional tensor is " +
                    std::to_string(uncond.height()) + "x" + std::to_string(uncond.width()) + "x" +
                    std::to_string(uncond.vocab().size()));
  }
  if (auto bad = uncond.first_non_finite()) {
    throw Error(Errc::non_finite_value, "unconditional tensor has a non-finite value at index " + std::to_string(*bad));
  }
  if (auto bad = cond.first_non_finite()) {
    throw Error(Errc::non_finite_value, "conditional tensor has a non-finite value at index " + std::to_string(*bad));
  }
}

}  // namespace swar
