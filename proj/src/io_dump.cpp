#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "byte_stream.hpp"
#include "swar/io.hpp"

namespace swar {

namespace {

constexpr std::string_view kDumpMagic = "SWARLOG1";

void put_tensor(detail::ByteWriter& out, const LogitTensor& t) {
  for (double v : t.values()) out.put(static_cast<float>(v));
}

LogitTensor get_tensor(detail::ByteReader& in, GridShape shape, VocabSpec vocab, std::string_view what) {
  const std::size_t count = shape.positions() * vocab.size();
  in.require(count * sizeof(float), what);
  std::vector<double> values(count);
  for (auto& v : values) {
    const std::size_t at = in.offset();
    const float f = in.get<float>(what);
    if (!std::isfinite(f)) {
      throw Error(Errc::non_finite_value, "non-finite value in " + std::string(what), at);
    }
    v = f;
  }
  return LogitTensor(shape, vocab, std::move(values));
}

}  // namespace

std::vector<GridShape> LogitDump::scales() const {
  std::vector<GridShape> out;
  for (const auto& s : steps) out.push_back(s.conditional.shape());
  return out;
}

Bytes encode_dump(const LogitDump& dump) {
  detail::ByteWriter out;
  out.magic(kDumpMagic);
  out.put(static_cast<std::uint32_t>(dump.vocab.size()));
  out.put(static_cast<std::uint32_t>(dump.steps.size()));
  for (const auto& step : dump.steps) {
    validate_pair(step.unconditional, step.conditional);
    if (step.conditional.vocab() != dump.vocab) {
      throw Error(Errc::shape_mismatch, "dump step vocabulary differs from the header");
    }
    out.put(static_cast<std::uint32_t>(step.conditional.height()));
    out.put(static_cast<std::uint32_t>(step.conditional.width()));
    put_tensor(out, step.conditional);
    put_tensor(out, step.unconditional);
  }
  return out.take();
}

LogitDump decode_dump(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  in.expect_magic(kDumpMagic);
  const std::size_t vocab_at = in.offset();
  const auto vocab_size = in.get<std::uint32_t>("header");
  if (vocab_size < 2) throw Error(Errc::parse_error, "vocabulary size must be at least 2", vocab_at);
  const VocabSpec vocab(vocab_size);
  const auto steps = in.get<std::uint32_t>("header");

  LogitDump dump{vocab, {}};
  for (std::uint32_t k = 0; k < steps; ++k) {
    const std::size_t at = in.offset();
    const auto h = in.get<std::uint32_t>("step header");
    const auto w = in.get<std::uint32_t>("step header");
    if (h == 0 || w == 0 || h > 1u << 15 || w > 1u << 15) {
      throw Error(Errc::parse_error, "step " + std::to_string(k) + " declares a " + std::to_string(h) + "x" +
                                         std::to_string(w) + " grid",
                  at);
    }
    const GridShape shape{static_cast<int>(h), static_cast<int>(w)};
    const unsigned __int128 need = static_cast<unsigned __int128>(shape.positions()) * vocab_size * 2 * sizeof(float);
    if (need > in.remaining()) {
      const unsigned __int128 total = need + in.offset();
      const auto expected = total > std::numeric_limits<std::uint64_t>::max()
                                ? std::string("more than 2^64")
                                : std::to_string(static_cast<std::uint64_t>(total));
      throw Error(Errc::size_mismatch,
                  "step " + std::to_string(k) + " payload: expected " + expected + " bytes, file has " +
                      std::to_string(bytes.size()),
                  in.offset());
    }
    auto cond = get_tensor(in, shape, vocab, "conditional logits of step " + std::to_string(k));
    auto uncond = get_tensor(in, shape, vocab, "unconditional logits of step " + std::to_string(k));
    dump.steps.push_back({std::move(cond), std::move(uncond)});
  }
  in.expect_end();
  return dump;
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_failure, "cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::io_failure, "failed reading " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_failure, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_failure, "failed writing " + path.string());
}

void write_dump(const std::filesystem::path& path, const LogitDump& dump) { write_file(path, encode_dump(dump)); }

LogitDump read_dump(const std::filesystem::path& path) { return decode_dump(read_file(path)); }

}  // namespace swar
