#include <cctype>
#include <string>

#include "swar/io.hpp"

namespace swar {

namespace {

// Netpbm header tokenizer: whitespace-separated fields, '#' starts a comment
// running to end of line.
class NetpbmHeader {
 public:
  explicit NetpbmHeader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const noexcept { return pos_; }

  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  int number(std::string_view what) {
    skip_space();
    const std::size_t start = pos_;
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > 1 << 20) throw Error(Errc::parse_error, std::string(what) + " is too large", start);
      ++pos_;
    }
    if (pos_ == start) {
      throw Error(pos_ >= bytes_.size() ? Errc::size_mismatch : Errc::parse_error,
                  "expected " + std::string(what), start);
    }
    return static_cast<int>(value);
  }

  /// Exactly one whitespace byte separates the header from binary payload.
  void single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw Error(Errc::parse_error, "expected whitespace before pixel data", pos_);
    }
    ++pos_;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

SegMask parse_mask(std::span<const std::uint8_t> bytes, std::optional<GridShape> expected) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '1')) {
    throw Error(Errc::unsupported_format, "mask must be binary PGM (P5) or ASCII PBM (P1)", 0);
  }
  const bool pgm = bytes[1] == '5';
  NetpbmHeader header(bytes.subspan(2));
  const int width = header.number("width");
  const int height = header.number("height");
  if (width < 1 || height < 1) throw Error(Errc::parse_error, "mask sides must be positive", 2 + header.offset());
  const GridShape shape{height, width};
  if (expected && *expected != shape) {
    throw Error(Errc::dimension_mismatch, "mask is " + std::to_string(height) + "x" + std::to_string(width) +
                                              ", expected " + std::to_string(expected->height) + "x" +
                                              std::to_string(expected->width));
  }

  std::vector<std::uint8_t> bits(shape.positions());
  if (pgm) {
    const int maxval = header.number("maxval");
    if (maxval < 1 || maxval > 255) {
      throw Error(Errc::unsupported_format, "only 8-bit PGM masks are supported (maxval " + std::to_string(maxval) + ")",
                  2 + header.offset());
    }
    header.single_space();
    const std::size_t start = 2 + header.offset();
    const std::size_t have = bytes.size() - start;
    if (have < bits.size()) {
      throw Error(Errc::size_mismatch, "PGM payload truncated: expected " + std::to_string(bits.size()) +
                                           " bytes, found " + std::to_string(have),
                  bytes.size());
    }
    if (have > bits.size()) {
      throw Error(Errc::size_mismatch, "PGM payload has " + std::to_string(have - bits.size()) + " trailing bytes",
                  start + bits.size());
    }
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = bytes[start + i] > 127 ? 1 : 0;
  } else {
    std::size_t pos = 2 + header.offset();
    for (std::size_t i = 0; i < bits.size(); ++i) {
      while (pos < bytes.size() && (std::isspace(bytes[pos]) || bytes[pos] == '#')) {
        if (bytes[pos] == '#') {
          while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else {
          ++pos;
        }
      }
      if (pos >= bytes.size()) {
        throw Error(Errc::size_mismatch, "PBM payload truncated: expected " + std::to_string(bits.size()) +
                                             " pixels, found " + std::to_string(i),
                    pos);
      }
      if (bytes[pos] != '0' && bytes[pos] != '1') {
        throw Error(Errc::parse_error, "PBM pixel must be 0 or 1", pos);
      }
      bits[i] = bytes[pos] == '1' ? 1 : 0;
      ++pos;
    }
  }
  return SegMask(shape, std::move(bits));
}

SegMask read_mask(const std::filesystem::path& path, std::optional<GridShape> expected) {
  return parse_mask(read_file(path), expected);
}

void write_mask(const std::filesystem::path& path, const SegMask& mask) {
  const std::string header =
      "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
  Bytes bytes(header.begin(), header.end());
  for (auto b : mask.bits()) bytes.push_back(b ? 255 : 0);
  write_file(path, bytes);
}

}  // namespace swar
