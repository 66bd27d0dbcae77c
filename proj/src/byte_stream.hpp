#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "swar/error.hpp"

namespace swar::detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
T to_little(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
    std::reverse(raw.begin(), raw.end());
    return std::bit_cast<T>(raw);
  }
  return value;
}

class ByteWriter {
 public:
  void magic(std::string_view tag) { out_.insert(out_.end(), tag.begin(), tag.end()); }

  template <class T>
  void put(T value) {
    const T le = to_little(value);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &le, sizeof(T));
    out_.insert(out_.end(), raw, raw + sizeof(T));
  }

  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

/// Bounds-checked little-endian reader; every failure reports its offset.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  void expect_magic(std::string_view tag) {
    if (bytes_.size() < tag.size() || std::memcmp(bytes_.data(), tag.data(), tag.size()) != 0) {
      std::string found;
      for (std::size_t i = 0; i < std::min(bytes_.size(), tag.size()); ++i) {
        const char ch = static_cast<char>(bytes_[i]);
        found += (ch >= 32 && ch < 127) ? ch : '?';
      }
      throw Error(Errc::bad_magic, "expected magic \"" + std::string(tag) + "\", found \"" + found + "\"", 0);
    }
    pos_ = tag.size();
  }

  void require(std::size_t count, std::string_view what) {
    if (remaining() < count) {
      throw Error(Errc::size_mismatch,
                  "truncated " + std::string(what) + ": expected " + std::to_string(pos_ + count) +
                      " bytes, file has " + std::to_string(bytes_.size()),
                  pos_);
    }
  }

  template <class T>
  T get(std::string_view what) {
    require(sizeof(T), what);
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return to_little(value);
  }

  void expect_end() const {
    if (remaining() != 0) {
      throw Error(Errc::size_mismatch,
                  "declared content ends at byte " + std::to_string(pos_) + " but file has " +
                      std::to_string(bytes_.size()) + " bytes",
                  pos_);
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace swar::detail
