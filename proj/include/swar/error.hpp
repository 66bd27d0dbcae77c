#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace swar {

enum class Errc {
  shape_mismatch,
  non_finite_value,
  invalid_argument,
  all_zero_field,
  single_token_map,
  length_mismatch,
  empty_background,
  empty_foreground,
  no_scored_steps,
  invalid_dims,
  unknown_class,
  schedule_mismatch,
  oracle_failure,
  bad_magic,
  size_mismatch,
  parse_error,
  unsupported_format,
  dimension_mismatch,
  io_failure,
  seed_set_mismatch,
};

std::string_view errc_name(Errc code) noexcept;

/// Typed failure raised by every module. Format errors carry the byte offset
/// at which the reader gave up.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::optional<std::uint64_t> offset = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::uint64_t> offset() const noexcept { return offset_; }

 private:
  Errc code_;
  std::optional<std::uint64_t> offset_;
};

}  // namespace swar
