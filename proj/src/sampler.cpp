#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "swar/metrics.hpp"
#include "swar/sim.hpp"

namespace swar {

ReplayOracle::ReplayOracle(LogitDump dump) : dump_(std::move(dump)) {
  if (dump_.steps.empty()) throw Error(Errc::invalid_argument, "logit dump holds no steps");
}

LogitTensor ReplayOracle::next_logits(std::size_t k, std::span<const TokenMap> /*history*/,
                                      std::optional<std::uint32_t> condition) const {
  if (k >= dump_.steps.size()) {
    throw Error(Errc::oracle_failure, "dump has no step " + std::to_string(k));
  }
  return condition ? dump_.steps[k].conditional : dump_.steps[k].unconditional;
}

ReplayOracle replay_oracle(const std::filesystem::path& path) { return ReplayOracle(read_dump(path)); }

LogitDump record_dump(const ModelOracle& oracle, std::uint32_t condition) {
  LogitDump dump{oracle.vocab(), {}};
  const auto scales = oracle.scales();
  for (std::size_t k = 0; k < scales.size(); ++k) {
    dump.steps.push_back({oracle.next_logits(k, {}, condition), oracle.next_logits(k, {}, std::nullopt)});
  }
  return dump;
}

TokenMap sample_step(const LogitTensor& logits, const SamplerConfig& config, Rng& rng) {
  if (auto bad = logits.first_non_finite()) {
    throw Error(Errc::non_finite_value, "logits hold a non-finite value at index " + std::to_string(*bad));
  }
  if (!(config.temperature > 0.0)) throw Error(Errc::invalid_argument, "temperature must be positive");
  const std::size_t dim = logits.vocab().size();
  if (config.top_k && (*config.top_k == 0 || *config.top_k > dim)) {
    throw Error(Errc::invalid_argument, "top_k must lie in [1, |V|]");
  }
  const std::size_t keep = config.top_k ? *config.top_k : dim;
  const bool greedy = config.temperature < kGreedyTemperature || keep == 1;

  std::vector<std::uint32_t> tokens(logits.positions());
  std::vector<std::uint32_t> order(dim);
  std::vector<double> weights(keep);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto row = logits.row(i);
    if (greedy) {
      tokens[i] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
      continue;
    }
    std::iota(order.begin(), order.end(), 0u);
    if (keep < dim) {
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                        [&](std::uint32_t a, std::uint32_t b) { return row[a] > row[b] || (row[a] == row[b] && a < b); });
    }
    double peak = row[order[0]];
    for (std::size_t j = 1; j < keep; ++j) peak = std::max(peak, row[order[j]]);
    double total = 0.0;
    for (std::size_t j = 0; j < keep; ++j) {
      weights[j] = std::exp((row[order[j]] - peak) / config.temperature);
      total += weights[j];
    }
    const double target = rng.uniform() * total;
    double acc = 0.0;
    std::size_t pick = keep - 1;
    for (std::size_t j = 0; j < keep; ++j) {
      acc += weights[j];
      if (target < acc) {
        pick = j;
        break;
      }
    }
    tokens[i] = order[pick];
  }
  return TokenMap(logits.shape(), std::move(tokens), logits.vocab());
}

RunRecord run_sampling(const ModelOracle& oracle, const SamplerConfig& config, std::uint32_t condition) {
  const auto scales = oracle.scales();
  if (scales != config.schedule.steps()) {
    throw Error(Errc::schedule_mismatch, "oracle serves " + std::to_string(scales.size()) +
                                             " scales that do not match the sampler schedule");
  }
  const VocabSpec vocab = oracle.vocab();
  Rng rng(config.seed);
  RunRecord run{config.schedule, config.scheme.kind, condition, config.seed, {}, std::nullopt, std::nullopt};
  std::vector<TokenMap> history;
  for (std::size_t k = 0; k < scales.size(); ++k) {
    auto query = [&](std::optional<std::uint32_t> cond) {
      try {
        auto t = oracle.next_logits(k, history, cond);
        if (t.shape() != scales[k] || t.vocab() != vocab) {
          throw Error(Errc::oracle_failure, "oracle returned a tensor of the wrong shape at step " + std::to_string(k));
        }
        return t;
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        throw Error(Errc::oracle_failure, "step " + std::to_string(k) + ": " + e.what());
      }
    };
    const auto uncond = query(std::nullopt);
    const auto cond = query(condition);
    auto guided = guide(config.scheme, config.schedule, k, uncond, cond);
    auto tokens = sample_step(guided.logits, config, rng);
    auto evenness = step_evenness(k, guided.field);
    history.push_back(tokens);
    run.steps.push_back({std::move(tokens), std::move(guided.field), evenness, std::nullopt});
  }
  refresh_aggregates(run);
  return run;
}

}  // namespace swar
