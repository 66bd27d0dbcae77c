#include "swar/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "swar/rng.hpp"

namespace swar {

namespace {

constexpr double kProbTolerance = 1e-9;

double kl_bits(std::span<const double> p, std::span<const double> m) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) total += p[i] * std::log2(p[i] / m[i]);
  }
  return total;
}

std::vector<double> histogram(std::span<const double> values, double peak, int bins) {
  std::vector<double> counts(static_cast<std::size_t>(bins), 0.0);
  for (double x : values) {
    int b = peak > 0.0 ? static_cast<int>(x / peak * bins) : 0;
    b = std::clamp(b, 0, bins - 1);
    counts[static_cast<std::size_t>(b)] += 1.0;
  }
  const double total = static_cast<double>(values.size());
  for (auto& c : counts) c /= total;
  return counts;
}

}  // namespace

TokenGuidanceDist::TokenGuidanceDist(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw Error(Errc::invalid_argument, "distribution needs at least one outcome");
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw Error(Errc::invalid_argument, "probabilities must be finite and >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > kProbTolerance) {
    throw Error(Errc::invalid_argument, "probabilities sum to " + std::to_string(total));
  }
}

std::vector<double> position_norms(const GuidanceField& field) {
  std::vector<double> norms(field.positions());
  for (std::size_t i = 0; i < norms.size(); ++i) {
    double sq = 0.0;
    for (double x : field.row(i)) sq += x * x;
    norms[i] = std::sqrt(sq);
  }
  return norms;
}

TokenGuidanceDist guidance_magnitudes(const GuidanceField& field) {
  if (auto bad = field.first_non_finite()) {
    throw Error(Errc::non_finite_value, "guidance field has a non-finite value at index " + std::to_string(*bad));
  }
  auto norms = position_norms(field);
  const double total = std::accumulate(norms.begin(), norms.end(), 0.0);
  if (total == 0.0) throw Error(Errc::all_zero_field, "guidance field is zero at every position");
  for (auto& x : norms) x /= total;
  return TokenGuidanceDist(std::move(norms));
}

double pielou_evenness(const TokenGuidanceDist& dist) {
  const auto p = dist.probs();
  if (p.size() < 2) throw Error(Errc::single_token_map, "evenness is undefined for a single-token map");
  const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
  if (*lo == *hi) return 1.0;
  double entropy = 0.0;
  for (double x : p) {
    if (x > 0.0) entropy -= x * std::log(x);
  }
  return std::clamp(entropy / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

double jsd(const TokenGuidanceDist& p, const TokenGuidanceDist& q) {
  if (p.size() != q.size()) {
    throw Error(Errc::length_mismatch,
                "distributions have " + std::to_string(p.size()) + " and " + std::to_string(q.size()) + " outcomes");
  }
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double half = 0.5 * kl_bits(p.probs(), m) + 0.5 * kl_bits(q.probs(), m);
  return std::clamp(std::sqrt(std::max(0.0, half)), 0.0, 1.0);
}

SegMask downsample_mask(const SegMask& mask, int height, int width) {
  const int src_h = mask.height(), src_w = mask.width();
  if (height < 1 || width < 1 || height > src_h || width > src_w) {
    throw Error(Errc::invalid_dims, "cannot downsample a " + std::to_string(src_h) + "x" + std::to_string(src_w) +
                                        " mask to " + std::to_string(height) + "x" + std::to_string(width));
  }
  // Work in units of 1/height (rows) and 1/width (columns) so every overlap
  // is an exact integer: output row r spans [r*src_h, (r+1)*src_h) and
  // source row y spans [y*height, (y+1)*height).
  auto overlap = [](long a0, long a1, long b0, long b1) { return std::max(0L, std::min(a1, b1) - std::max(a0, b0)); };
  std::vector<std::uint8_t> bits(static_cast<std::size_t>(height) * width);
  const long cell_area = static_cast<long>(src_h) * src_w;
  for (int r = 0; r < height; ++r) {
    const long r0 = static_cast<long>(r) * src_h, r1 = r0 + src_h;
    const int y_begin = static_cast<int>(r0 / height);
    const int y_end = static_cast<int>(std::min<long>(src_h, (r1 + height - 1) / height));
    for (int c = 0; c < width; ++c) {
      const long c0 = static_cast<long>(c) * src_w, c1 = c0 + src_w;
      const int x_begin = static_cast<int>(c0 / width);
      const int x_end = static_cast<int>(std::min<long>(src_w, (c1 + width - 1) / width));
      long covered = 0;
      for (int y = y_begin; y < y_end; ++y) {
        const long dy = overlap(r0, r1, static_cast<long>(y) * height, static_cast<long>(y + 1) * height);
        for (int x = x_begin; x < x_end; ++x) {
          if (!mask.at(y, x)) continue;
          covered += dy * overlap(c0, c1, static_cast<long>(x) * width, static_cast<long>(x + 1) * width);
        }
      }
      bits[static_cast<std::size_t>(r) * width + c] = 2 * covered >= cell_area ? 1 : 0;
    }
  }
  return SegMask({height, width}, std::move(bits));
}

namespace {

void check_mask(const RunRecord& run, const SegMask& mask) {
  if (run.steps.size() < 2) throw Error(Errc::invalid_argument, "divergence needs at least two steps");
  if (mask.shape() != run.schedule.final_step()) {
    throw Error(Errc::dimension_mismatch,
                "mask is " + std::to_string(mask.height()) + "x" + std::to_string(mask.width()) +
                    " but the final scale is " + std::to_string(run.schedule.final_step().height) + "x" +
                    std::to_string(run.schedule.final_step().width));
  }
  const std::size_t fg = mask.foreground_count();
  if (fg == 0) throw Error(Errc::empty_foreground, "mask has no foreground pixel");
  if (fg == mask.shape().positions()) throw Error(Errc::empty_background, "mask has no background pixel");
}

}  // namespace

std::vector<StepDivergence> divergence_steps(const RunRecord& run, const SegMask& mask, std::uint64_t seed,
                                             const DivergenceOptions& options) {
  check_mask(run, mask);
  if (options.bins < 2) throw Error(Errc::invalid_argument, "divergence needs at least two bins");
  Rng rng(seed);
  std::vector<StepDivergence> out;
  for (std::size_t k = 1; k < run.steps.size(); ++k) {
    const auto& field = run.steps[k].field;
    const SegMask local = downsample_mask(mask, field.height(), field.width());
    const auto norms = position_norms(field);

    std::vector<double> guided, background;
    for (std::size_t i = 0; i < norms.size(); ++i) (local.at(i) ? guided : background).push_back(norms[i]);
    if (guided.empty() || background.empty()) {
      out.push_back({k, std::nullopt});
      continue;
    }
    std::vector<double> resampled(norms.size());
    for (auto& x : resampled) x = background[rng.index(background.size())];

    const double peak = *std::max_element(norms.begin(), norms.end());
    const TokenGuidanceDist p(histogram(guided, peak, options.bins));
    const TokenGuidanceDist q(histogram(resampled, peak, options.bins));
    out.push_back({k, jsd(p, q)});
  }
  return out;
}

double divergence_score(const RunRecord& run, const SegMask& mask, std::uint64_t seed,
                        const DivergenceOptions& options) {
  const auto steps = divergence_steps(run, mask, seed, options);
  double weighted = 0.0, total = 0.0;
  for (const auto& s : steps) {
    if (!s.divergence) continue;
    const double w = static_cast<double>(run.schedule.step(s.step).positions());
    weighted += w * *s.divergence;
    total += w;
  }
  if (total == 0.0) {
    throw Error(Errc::empty_foreground, "no step keeps both foreground and background after downsampling");
  }
  return std::clamp(weighted / total, 0.0, 1.0);
}

AggregateScores weighted_mean_scores(std::span<const StepScores> steps) {
  double ev = 0.0, ev_w = 0.0, dv = 0.0, dv_w = 0.0;
  for (const auto& s : steps) {
    if (s.step == 0) continue;
    if (s.evenness) {
      ev += s.weight * *s.evenness;
      ev_w += s.weight;
    }
    if (s.divergence) {
      dv += s.weight * *s.divergence;
      dv_w += s.weight;
    }
  }
  if (ev_w == 0.0 && dv_w == 0.0) throw Error(Errc::no_scored_steps, "no step carries a score");
  AggregateScores out;
  if (ev_w > 0.0) out.evenness = std::clamp(ev / ev_w, 0.0, 1.0);
  if (dv_w > 0.0) out.divergence = std::clamp(dv / dv_w, 0.0, 1.0);
  return out;
}

std::optional<double> step_evenness(std::size_t k, const GuidanceField& field) {
  if (k == 0 || field.positions() < 2) return std::nullopt;
  try {
    return pielou_evenness(guidance_magnitudes(field));
  } catch (const Error& e) {
    if (e.code() == Errc::all_zero_field) return std::nullopt;
    throw;
  }
}

void refresh_aggregates(RunRecord& run) {
  std::vector<StepScores> scores;
  for (std::size_t k = 0; k < run.steps.size(); ++k) {
    scores.push_back({k, run.steps[k].evenness, run.steps[k].divergence,
                      static_cast<double>(run.schedule.step(k).positions())});
  }
  run.evenness.reset();
  run.divergence.reset();
  try {
    const auto agg = weighted_mean_scores(scores);
    run.evenness = agg.evenness;
    run.divergence = agg.divergence;
  } catch (const Error& e) {
    if (e.code() != Errc::no_scored_steps) throw;
  }
}

void score_divergence(RunRecord& run, const SegMask& mask, std::uint64_t seed, const DivergenceOptions& options) {
  const auto steps = divergence_steps(run, mask, seed, options);
  for (auto& step : run.steps) step.divergence.reset();
  for (const auto& s : steps) run.steps[s.step].divergence = s.divergence;
  refresh_aggregates(run);
}

}  // namespace swar
