#include "swar/error.hpp"

namespace swar {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::non_finite_value: return "non-finite-value";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::all_zero_field: return "all-zero-field";
    case Errc::single_token_map: return "single-token-map";
    case Errc::length_mismatch: return "length-mismatch";
    case Errc::empty_background: return "empty-background";
    case Errc::empty_foreground: return "empty-foreground";
    case Errc::no_scored_steps: return "no-scored-steps";
    case Errc::invalid_dims: return "invalid-dims";
    case Errc::unknown_class: return "unknown-class";
    case Errc::schedule_mismatch: return "schedule-mismatch";
    case Errc::oracle_failure: return "oracle-failure";
    case Errc::bad_magic: return "bad-magic";
    case Errc::size_mismatch: return "size-mismatch";
    case Errc::parse_error: return "parse-error";
    case Errc::unsupported_format: return "unsupported-format";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::io_failure: return "io-failure";
    case Errc::seed_set_mismatch: return "seed-set-mismatch";
  }
  return "unknown";
}

namespace {

std::string decorate(Errc code, const std::string& message, std::optional<std::uint64_t> offset) {
  std::string out(errc_name(code));
  out += ": ";
  out += message;
  if (offset) {
    out += " (at byte offset " + std::to_string(*offset) + ")";
  }
  return out;
}

}  // namespace

Error::Error(Errc code, std::string message, std::optional<std::uint64_t> offset)
    : std::runtime_error(decorate(code, message, offset)), code_(code), offset_(offset) {}

}  // namespace swar
