#include <algorithm>
#include <cmath>
#include <string>

#include "swar/sim.hpp"

namespace swar {

namespace {

constexpr std::uint64_t kBaseStream = 0x62617365;     // "base"
constexpr std::uint64_t kAmplitudeStream = 0x616d70;  // "amp"

void blur_axis(std::vector<double>& values, int height, int width, std::size_t dim, double sigma, bool along_rows) {
  const int n = along_rows ? height : width;
  std::vector<double> kernel(static_cast<std::size_t>(n) * n);
  for (int a = 0; a < n; ++a) {
    double total = 0.0;
    for (int b = 0; b < n; ++b) {
      const double d = static_cast<double>(a - b) / sigma;
      kernel[static_cast<std::size_t>(a) * n + b] = std::exp(-0.5 * d * d);
      total += kernel[static_cast<std::size_t>(a) * n + b];
    }
    for (int b = 0; b < n; ++b) kernel[static_cast<std::size_t>(a) * n + b] /= total;
  }
  std::vector<double> out(values.size(), 0.0);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      double* dst = out.data() + (static_cast<std::size_t>(r) * width + c) * dim;
      const int a = along_rows ? r : c;
      for (int b = 0; b < n; ++b) {
        const double weight = kernel[static_cast<std::size_t>(a) * n + b];
        const std::size_t src_pos = along_rows ? static_cast<std::size_t>(b) * width + c
                                               : static_cast<std::size_t>(r) * width + b;
        const double* src = values.data() + src_pos * dim;
        for (std::size_t v = 0; v < dim; ++v) dst[v] += weight * src[v];
      }
    }
  }
  values = std::move(out);
}

void gaussian_blur(std::vector<double>& values, GridShape shape, std::size_t dim, double sigma) {
  if (sigma <= 0.0) return;
  blur_axis(values, shape.height, shape.width, dim, sigma, true);
  blur_axis(values, shape.height, shape.width, dim, sigma, false);
}

}  // namespace

bool SceneShape::contains(double y, double x) const {
  const double dy = y - center_y, dx = x - center_x;
  if (kind == Kind::disk) return dy * dy + dx * dx <= extent_y * extent_y;
  return std::abs(dy) <= extent_y && std::abs(dx) <= extent_x;
}

std::vector<SceneShape> default_shapes(std::uint32_t classes) {
  std::vector<SceneShape> shapes;
  for (std::uint32_t c = 0; c < classes; ++c) {
    const double shift = 0.08 * (static_cast<double>((c / 2) % 3) - 1.0);
    if (c % 2 == 0) {
      shapes.push_back({SceneShape::Kind::disk, 0.45 + shift, 0.42 - shift, 0.3, 0.3});
    } else {
      shapes.push_back({SceneShape::Kind::rectangle, 0.5 - shift, 0.58 + shift, 0.3, 0.28});
    }
  }
  return shapes;
}

SceneOracle::SceneOracle(SceneOracleConfig config) : config_(std::move(config)) {
  if (config_.classes < 1 || config_.classes > config_.vocab.size()) {
    throw Error(Errc::invalid_argument, "class count must lie in [1, |V|]");
  }
  if (config_.shapes.empty()) config_.shapes = default_shapes(config_.classes);
  if (config_.shapes.size() != config_.classes) {
    throw Error(Errc::invalid_argument, "need one foreground shape per class");
  }
  if (config_.scales.empty()) throw Error(Errc::invalid_argument, "scene oracle needs at least one scale");
  if (!(config_.contrast >= 0.0) || !(config_.smoothness >= 0.0) || !(config_.texture >= 0.0) ||
      !std::isfinite(config_.texture_spread)) {
    throw Error(Errc::invalid_argument, "contrast, smoothness and texture must be finite and non-negative");
  }
  for (std::uint32_t c = 0; c < config_.classes; ++c) {
    for (const auto& shape : config_.scales) {
      if (shape.height < 2 || shape.width < 2) continue;
      const auto cells = region(c, shape).foreground_count();
      if (cells == 0 || cells == shape.positions()) {
        throw Error(Errc::invalid_argument, "class " + std::to_string(c) + " region is empty or covers the whole " +
                                                std::to_string(shape.height) + "x" + std::to_string(shape.width) +
                                                " grid");
      }
    }
  }
}

SegMask SceneOracle::region(std::uint32_t condition, GridShape shape) const {
  if (condition >= config_.classes) {
    throw Error(Errc::unknown_class, "class " + std::to_string(condition) + " not in [0, " +
                                         std::to_string(config_.classes) + ")");
  }
  const auto& s = config_.shapes[condition];
  std::vector<std::uint8_t> bits(shape.positions());
  for (int r = 0; r < shape.height; ++r) {
    for (int c = 0; c < shape.width; ++c) {
      const double y = (r + 0.5) / shape.height;
      const double x = (c + 0.5) / shape.width;
      bits[static_cast<std::size_t>(r) * shape.width + c] = s.contains(y, x) ? 1 : 0;
    }
  }
  return SegMask(shape, std::move(bits));
}

SegMask SceneOracle::foreground_mask(std::uint32_t condition) const { return region(condition, config_.scales.back()); }

LogitTensor SceneOracle::next_logits(std::size_t k, std::span<const TokenMap> /*history*/,
                                     std::optional<std::uint32_t> condition) const {
  if (k >= config_.scales.size()) {
    throw Error(Errc::invalid_argument, "step " + std::to_string(k) + " beyond the oracle's " +
                                            std::to_string(config_.scales.size()) + " scales");
  }
  if (condition && *condition >= config_.classes) {
    throw Error(Errc::unknown_class, "class " + std::to_string(*condition) + " not in [0, " +
                                         std::to_string(config_.classes) + ")");
  }
  const GridShape shape = config_.scales[k];
  const std::size_t n = shape.positions();
  const std::size_t dim = config_.vocab.size();
  const std::uint64_t step_seed = mix64(config_.seed, k);

  std::vector<double> amplitude(n);
  {
    Rng rng(mix64(step_seed, kAmplitudeStream));
    for (auto& a : amplitude) a = config_.texture * std::exp(config_.texture_spread * rng.normal());
  }

  // Response of class c: region indicator on owned tokens plus texture.
  auto response = [&](std::uint32_t c) {
    const SegMask inside = region(c, shape);
    Rng rng(mix64(step_seed, c + 1));
    std::vector<double> out(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t v = 0; v < dim; ++v) {
        const double owned = (inside.at(i) && v % config_.classes == c) ? 1.0 : 0.0;
        out[i * dim + v] = owned + amplitude[i] * rng.normal();
      }
    }
    return out;
  };

  std::vector<double> part;
  if (condition) {
    part = response(*condition);
  } else {
    part.assign(n * dim, 0.0);
    for (std::uint32_t c = 0; c < config_.classes; ++c) {
      const auto r = response(c);
      for (std::size_t i = 0; i < part.size(); ++i) part[i] += r[i];
    }
    for (auto& x : part) x /= static_cast<double>(config_.classes);
    gaussian_blur(part, shape, dim, config_.smoothness);
  }

  Rng base(mix64(step_seed, kBaseStream));
  std::vector<double> values(n * dim);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<float>(base.normal() + config_.contrast * part[i]);
  }
  return LogitTensor(shape, config_.vocab, std::move(values));
}

LogitTensor scene_logits(const SceneOracleConfig& config, std::size_t k, std::optional<std::uint32_t> condition) {
  return SceneOracle(config).next_logits(k, {}, condition);
}

}  // namespace swar
