#include <cmath>
#include <limits>
#include <string>

#include "byte_stream.hpp"
#include "swar/io.hpp"

namespace swar {

namespace {

constexpr std::string_view kRunMagic = "SWARRUN1";

std::uint8_t score_flags(std::optional<double> evenness, std::optional<double> divergence) {
  return static_cast<std::uint8_t>((evenness ? 1 : 0) | (divergence ? 2 : 0));
}

void put_scores(detail::ByteWriter& out, std::optional<double> evenness, std::optional<double> divergence) {
  out.put(score_flags(evenness, divergence));
  out.put(evenness.value_or(0.0));
  out.put(divergence.value_or(0.0));
}

std::pair<std::optional<double>, std::optional<double>> get_scores(detail::ByteReader& in, std::string_view what) {
  const std::size_t at = in.offset();
  const auto flags = in.get<std::uint8_t>(what);
  if (flags > 3) throw Error(Errc::parse_error, "invalid score flags in " + std::string(what), at);
  const auto ev = in.get<double>(what);
  const auto dv = in.get<double>(what);
  std::optional<double> evenness, divergence;
  if (flags & 1) evenness = ev;
  if (flags & 2) divergence = dv;
  return {evenness, divergence};
}

}  // namespace

Bytes encode_run(const RunRecord& run) {
  validate_run(run);
  detail::ByteWriter out;
  out.magic(kRunMagic);
  out.put(static_cast<std::uint8_t>(run.scheme));
  out.put(static_cast<std::uint8_t>(run.schedule.kind() == ScheduleKind::ratio ? 0 : 1));
  out.put(static_cast<std::uint8_t>(run.schedule.secondary_weight() ? 1 : 0));
  out.put(std::uint8_t{0});
  out.put(run.schedule.weight());
  out.put(run.schedule.secondary_weight().value_or(0.0));
  out.put(static_cast<std::uint32_t>(run.schedule.size()));
  for (const auto& s : run.schedule.steps()) {
    out.put(static_cast<std::uint32_t>(s.height));
    out.put(static_cast<std::uint32_t>(s.width));
  }
  out.put(static_cast<std::uint32_t>(run.vocab().size()));
  out.put(run.condition_id);
  out.put(run.seed);
  for (const auto& step : run.steps) {
    for (auto t : step.token_map.tokens()) out.put(t);
    for (double v : step.field.values()) out.put(v);
    put_scores(out, step.evenness, step.divergence);
  }
  put_scores(out, run.evenness, run.divergence);
  return out.take();
}

RunRecord decode_run(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  in.expect_magic(kRunMagic);

  std::size_t at = in.offset();
  const auto scheme = in.get<std::uint8_t>("header");
  if (scheme > static_cast<std::uint8_t>(SchemeKind::igg_windowed)) {
    throw Error(Errc::parse_error, "unknown scheme tag " + std::to_string(scheme), at);
  }
  at = in.offset();
  const auto kind = in.get<std::uint8_t>("header");
  if (kind > 1) throw Error(Errc::parse_error, "unknown schedule kind " + std::to_string(kind), at);
  at = in.offset();
  const auto has_secondary = in.get<std::uint8_t>("header");
  if (has_secondary > 1) throw Error(Errc::parse_error, "invalid secondary-weight flag", at);
  in.get<std::uint8_t>("header");
  const auto weight = in.get<double>("header");
  const auto secondary = in.get<double>("header");
  at = in.offset();
  const auto count = in.get<std::uint32_t>("header");
  if (count == 0) throw Error(Errc::parse_error, "run declares zero steps", at);
  in.require(static_cast<std::size_t>(count) * 8, "step table");
  std::vector<GridShape> steps;
  for (std::uint32_t k = 0; k < count; ++k) {
    at = in.offset();
    const auto h = in.get<std::uint32_t>("step table");
    const auto w = in.get<std::uint32_t>("step table");
    if (h == 0 || w == 0 || h > 1u << 15 || w > 1u << 15) {
      throw Error(Errc::parse_error, "step " + std::to_string(k) + " declares an invalid grid", at);
    }
    steps.push_back({static_cast<int>(h), static_cast<int>(w)});
  }
  std::optional<ScaleSchedule> schedule;
  try {
    schedule.emplace(std::move(steps), weight, kind == 0 ? ScheduleKind::ratio : ScheduleKind::fixed,
                     has_secondary ? std::optional<double>(secondary) : std::nullopt);
  } catch (const Error& e) {
    throw Error(Errc::parse_error, std::string("invalid schedule: ") + e.what(), at);
  }

  at = in.offset();
  const auto vocab_size = in.get<std::uint32_t>("header");
  if (vocab_size < 2) throw Error(Errc::parse_error, "vocabulary size must be at least 2", at);
  const VocabSpec vocab(vocab_size);
  const auto condition = in.get<std::uint32_t>("header");
  const auto seed = in.get<std::uint64_t>("header");

  RunRecord run{*schedule, static_cast<SchemeKind>(scheme), condition, seed, {}, std::nullopt, std::nullopt};
  for (std::size_t k = 0; k < schedule->size(); ++k) {
    const GridShape shape = schedule->step(k);
    const std::string what = "step " + std::to_string(k);
    const unsigned __int128 need =
        static_cast<unsigned __int128>(shape.positions()) * (4 + 8 * static_cast<unsigned __int128>(vocab_size));
    if (need > in.remaining()) {
      in.require(in.remaining() + 1, what);
    }
    std::vector<std::uint32_t> tokens(shape.positions());
    for (auto& t : tokens) {
      at = in.offset();
      t = in.get<std::uint32_t>(what);
      if (t >= vocab_size) throw Error(Errc::parse_error, "token id " + std::to_string(t) + " outside vocabulary", at);
    }
    std::vector<double> values(shape.positions() * vocab_size);
    for (auto& v : values) {
      at = in.offset();
      v = in.get<double>(what);
      if (!std::isfinite(v)) throw Error(Errc::non_finite_value, "non-finite guidance value in " + what, at);
    }
    auto [ev, dv] = get_scores(in, what);
    run.steps.push_back({TokenMap(shape, std::move(tokens), vocab), GuidanceField(shape, vocab, std::move(values)), ev, dv});
  }
  auto [ev, dv] = get_scores(in, "aggregate scores");
  run.evenness = ev;
  run.divergence = dv;
  in.expect_end();
  try {
    validate_run(run);
  } catch (const Error& e) {
    throw Error(Errc::parse_error, std::string("inconsistent run record: ") + e.what(), in.offset());
  }
  return run;
}

void write_run(const std::filesystem::path& path, const RunRecord& run) { write_file(path, encode_run(run)); }

RunRecord read_run(const std::filesystem::path& path) { return decode_run(read_file(path)); }

}  // namespace swar
