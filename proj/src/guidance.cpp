#include "swar/guidance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <optional>
#include <string>

namespace swar {

namespace {

constexpr double kRowSumTolerance = 1e-9;

void require_same_shape(const GuidanceField& field, const LogitTensor& uncond) {
  if (field.shape() != uncond.shape() || field.vocab() != uncond.vocab()) {
    throw Error(Errc::shape_mismatch, "guidance field does not match the logit tensor it is applied to");
  }
}

void require_finite(const GuidanceField& field) {
  if (auto bad = field.first_non_finite()) {
    throw Error(Errc::non_finite_value, "guidance field has a non-finite value at index " + std::to_string(*bad));
  }
}

int chebyshev(std::size_t a, std::size_t b, int width) {
  const int ra = static_cast<int>(a) / width, ca = static_cast<int>(a) % width;
  const int rb = static_cast<int>(b) / width, cb = static_cast<int>(b) % width;
  return std::max(std::abs(ra - rb), std::abs(ca - cb));
}

// Shared by the global and windowed paths; with no masked pair the two
// produce identical bits.
AttentionMatrix attention_impl(const GuidanceField& field, VocabSpec vocab, std::optional<int> radius) {
  require_finite(field);
  const std::size_t n = field.positions();
  const std::size_t dim = field.vocab().size();
  const double scale = std::sqrt(static_cast<double>(vocab.size()));
  const auto g = field.values();

  std::vector<double> scores(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t v = 0; v < dim; ++v) dot += g[i * dim + v] * g[j * dim + v];
      const double s = dot / scale;
      if (!std::isfinite(s)) {
        throw Error(Errc::non_finite_value, "attention score overflow between positions " + std::to_string(i) +
                                                " and " + std::to_string(j));
      }
      scores[i * n + j] = s;
      scores[j * n + i] = s;
    }
  }

  if (radius) {
    const double masked = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (chebyshev(i, j, field.width()) > *radius) scores[i * n + j] = masked;
      }
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    double* row = scores.data() + i * n;
    const double peak = *std::max_element(row, row + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = std::exp(row[j] - peak);
      total += row[j];
    }
    for (std::size_t j = 0; j < n; ++j) row[j] /= total;
  }
  return AttentionMatrix(n, std::move(scores));
}

}  // namespace

AttentionMatrix::AttentionMatrix(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (n_ == 0 || values_.size() != n_ * n_) {
    throw Error(Errc::shape_mismatch, "attention matrix must be square and non-empty");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    double total = 0.0;
    for (double a : row(i)) {
      if (!(a >= 0.0 && a <= 1.0)) {
        throw Error(Errc::invalid_argument, "attention entry outside [0, 1] in row " + std::to_string(i));
      }
      total += a;
    }
    if (std::abs(total - 1.0) > kRowSumTolerance) {
      throw Error(Errc::invalid_argument, "attention row " + std::to_string(i) + " sums to " + std::to_string(total));
    }
  }
}

AttentionMatrix AttentionMatrix::identity(std::size_t n) {
  std::vector<double> values(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) values[i * n + i] = 1.0;
  return AttentionMatrix(n, std::move(values));
}

int WindowRule::window(GridShape shape) const {
  if (kind == Kind::fixed) {
    if (fixed_size < 1) throw Error(Errc::invalid_argument, "window size must be at least 1");
    return fixed_size;
  }
  const double side = std::round(std::sqrt(static_cast<double>(shape.positions())));
  return std::max(1, static_cast<int>(side));
}

GuidanceField nudge(const LogitTensor& uncond, const LogitTensor& cond, double gamma) {
  validate_pair(uncond, cond);
  const auto u = uncond.values();
  const auto c = cond.values();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = gamma * (c[i] - u[i]);
  return GuidanceField(uncond.shape(), uncond.vocab(), std::move(out));
}

LogitTensor cfg_guide(const LogitTensor& uncond, const LogitTensor& cond, double lambda) {
  validate_pair(uncond, cond);
  const auto u = uncond.values();
  const auto c = cond.values();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = (1.0 + lambda) * c[i] - lambda * u[i];
  return LogitTensor(uncond.shape(), uncond.vocab(), std::move(out));
}

LogitTensor apply_field(const LogitTensor& uncond, const GuidanceField& field) {
  require_same_shape(field, uncond);
  const auto u = uncond.values();
  const auto f = field.values();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] + f[i];
  return LogitTensor(uncond.shape(), uncond.vocab(), std::move(out));
}

AttentionMatrix attention_weights(const GuidanceField& field, VocabSpec vocab) {
  return attention_impl(field, vocab, std::nullopt);
}

AttentionMatrix attention_weights_windowed(const GuidanceField& field, VocabSpec vocab, int window) {
  if (window < 1) throw Error(Errc::invalid_argument, "window size must be at least 1");
  const int radius = window / 2;
  // A radius reaching every cell masks nothing.
  if (radius >= std::max(field.height(), field.width()) - 1) return attention_impl(field, vocab, std::nullopt);
  return attention_impl(field, vocab, radius);
}

GuidanceField attend(const AttentionMatrix& attention, const GuidanceField& field) {
  const std::size_t n = field.positions();
  if (attention.size() != n) {
    throw Error(Errc::shape_mismatch, "attention matrix is " + std::to_string(attention.size()) + "x" +
                                          std::to_string(attention.size()) + " but field has " + std::to_string(n) +
                                          " positions");
  }
  const std::size_t dim = field.vocab().size();
  const auto f = field.values();
  std::vector<double> out(n * dim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* dst = out.data() + i * dim;
    for (std::size_t j = 0; j < n; ++j) {
      const double a = attention.at(i, j);
      const double* src = f.data() + j * dim;
      for (std::size_t v = 0; v < dim; ++v) dst[v] += a * src[v];
    }
  }
  return GuidanceField(field.shape(), field.vocab(), std::move(out));
}

LogitTensor igg_guide(const LogitTensor& uncond, const LogitTensor& cond, double gamma, VocabSpec vocab) {
  const auto field = nudge(uncond, cond, gamma);
  return apply_field(uncond, attend(attention_weights(field, vocab), field));
}

LogitTensor igg_guide_windowed(const LogitTensor& uncond, const LogitTensor& cond, double gamma, VocabSpec vocab,
                               const WindowRule& rule) {
  const auto field = nudge(uncond, cond, gamma);
  const int window = rule.window(uncond.shape());
  return apply_field(uncond, attend(attention_weights_windowed(field, vocab, window), field));
}

namespace {

GuidanceField mixed_field(const LogitTensor& uncond, const LogitTensor& cond, double gamma, double gamma_prime,
                          VocabSpec vocab) {
  const auto linear = nudge(uncond, cond, gamma);
  const auto scaled = nudge(uncond, cond, gamma_prime);
  const auto grounded = attend(attention_weights(scaled, vocab), scaled);
  const auto a = linear.values();
  const auto b = grounded.values();
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return GuidanceField(uncond.shape(), uncond.vocab(), std::move(out));
}

}  // namespace

LogitTensor mixed_guide(const LogitTensor& uncond, const LogitTensor& cond, double gamma, double gamma_prime,
                        VocabSpec vocab) {
  return apply_field(uncond, mixed_field(uncond, cond, gamma, gamma_prime, vocab));
}

GuidedLogits guide(const GuidanceScheme& scheme, const ScaleSchedule& schedule, std::size_t k,
                   const LogitTensor& uncond, const LogitTensor& cond) {
  const VocabSpec vocab = uncond.vocab();
  switch (scheme.kind) {
    case SchemeKind::none:
      return {cond, nudge(uncond, cond, 1.0)};
    case SchemeKind::cfg:
      return {cfg_guide(uncond, cond, schedule.lambda(k)), nudge(uncond, cond, schedule.gamma(k))};
    case SchemeKind::igg: {
      const auto field = nudge(uncond, cond, schedule.gamma(k));
      auto grounded = attend(attention_weights(field, vocab), field);
      auto logits = apply_field(uncond, grounded);
      return {std::move(logits), std::move(grounded)};
    }
    case SchemeKind::igg_windowed: {
      const auto field = nudge(uncond, cond, schedule.gamma(k));
      const int window = scheme.window.window(uncond.shape());
      auto grounded = attend(attention_weights_windowed(field, vocab, window), field);
      auto logits = apply_field(uncond, grounded);
      return {std::move(logits), std::move(grounded)};
    }
    case SchemeKind::mixed: {
      auto field = mixed_field(uncond, cond, schedule.gamma(k), schedule.secondary_gamma(k), vocab);
      auto logits = apply_field(uncond, field);
      return {std::move(logits), std::move(field)};
    }
  }
  throw Error(Errc::invalid_argument, "unknown guidance scheme");
}

}  // namespace swar
