#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "swar/io.hpp"
#include "swar/metrics.hpp"
#include "swar/sim.hpp"
#include "test_util.hpp"

using namespace swar;
using swar::testing::error_code_of;
using swar::testing::scratch_dir;

namespace {

Bytes bytes_of(const std::string& s) { return Bytes(s.begin(), s.end()); }

LogitDump random_dump(Rng& rng) {
  const std::size_t vocab = 2 + rng.index(12);
  LogitDump d{VocabSpec(vocab), {}};
  const std::size_t K = 1 + rng.index(4);
  for (std::size_t k = 0; k < K; ++k) {
    const auto shape = swar::testing::random_shape(rng, 5);
    d.steps.push_back({swar::testing::random_f32_logits(rng, shape, vocab),
                       swar::testing::random_f32_logits(rng, shape, vocab)});
  }
  return d;
}

RunRecord random_run(Rng& rng) {
  const auto kinds = {SchemeKind::none, SchemeKind::cfg, SchemeKind::igg, SchemeKind::mixed,
                      SchemeKind::igg_windowed};
  std::vector<GridShape> steps;
  int side = 1;
  const std::size_t K = 1 + rng.index(4);
  for (std::size_t k = 0; k < K; ++k) {
    steps.push_back({side, side + static_cast<int>(rng.index(2))});
    side += 1 + static_cast<int>(rng.index(2));
  }
  std::optional<double> w2;
  if (rng.uniform() < 0.5) w2 = rng.normal();
  const ScaleSchedule schedule(steps, rng.normal(), rng.uniform() < 0.5 ? ScheduleKind::ratio : ScheduleKind::fixed,
                               w2);
  const std::size_t vocab = 2 + rng.index(6);
  RunRecord run{schedule, *(kinds.begin() + rng.index(5)), static_cast<std::uint32_t>(rng.index(100)), rng.next(),
                {}, std::nullopt, std::nullopt};
  for (const auto& shape : steps) {
    std::vector<std::uint32_t> tokens(shape.positions());
    for (auto& t : tokens) t = static_cast<std::uint32_t>(rng.index(vocab));
    std::optional<double> e, d;
    if (rng.uniform() < 0.7) e = rng.uniform();
    if (rng.uniform() < 0.5) d = rng.uniform();
    run.steps.push_back({TokenMap(shape, tokens, VocabSpec(vocab)), swar::testing::random_field(rng, shape, vocab), e, d});
  }
  if (rng.uniform() < 0.7) run.evenness = rng.uniform();
  if (rng.uniform() < 0.5) run.divergence = rng.uniform();
  return run;
}

}  // namespace

TEST(LogitDump, RoundTripsRandomDumps) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = random_dump(rng);
    const auto bytes = encode_dump(d);
    const auto back = decode_dump(bytes);
    ASSERT_EQ(back, d);
    ASSERT_EQ(encode_dump(back), bytes);
  }
}

TEST(LogitDump, FileRoundTrip) {
  Rng rng(2);
  const auto d = random_dump(rng);
  const auto path = scratch_dir("dump") / "x.swarlog";
  write_dump(path, d);
  EXPECT_EQ(read_dump(path), d);
  EXPECT_EQ(replay_oracle(path).dump(), d);
}

TEST(LogitDump, LayoutIsLittleEndianF32) {
  const LogitDump d{VocabSpec(2), {{LogitTensor({1, 1}, VocabSpec(2), {1.0, -2.0}),
                                    LogitTensor({1, 1}, VocabSpec(2), {0.5, 0.0})}}};
  const auto b = encode_dump(d);
  ASSERT_EQ(b.size(), 8u + 8u + 8u + 16u);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 8), "SWARLOG1");
  EXPECT_EQ(b[8], 2);
  EXPECT_EQ(b[12], 1);
  EXPECT_EQ(b[16], 1);
  EXPECT_EQ(b[20], 1);
  const std::uint8_t one[4] = {0x00, 0x00, 0x80, 0x3f};
  EXPECT_EQ(std::memcmp(b.data() + 24, one, 4), 0);
}

TEST(LogitDump, BadMagic) {
  Rng rng(3);
  auto b = encode_dump(random_dump(rng));
  b[7] = 'X';
  try {
    decode_dump(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::bad_magic);
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(LogitDump, NaNReportedAtExactOffset) {
  const LogitDump d{VocabSpec(3), {{LogitTensor::zeros({2, 2}, VocabSpec(3)), LogitTensor::zeros({2, 2}, VocabSpec(3))}}};
  auto b = encode_dump(d);
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const std::size_t at = 8 + 4 + 4 + 8 + 4 * 17;  // unconditional tensor, entry 5
  std::memcpy(b.data() + at, &nan, 4);
  try {
    decode_dump(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::non_finite_value);
    EXPECT_EQ(e.offset(), at);
  }
}

TEST(LogitDump, TruncationNamesExpectedAndActualLength) {
  Rng rng(4);
  auto b = encode_dump(random_dump(rng));
  const auto full = b.size();
  b.resize(full - 3);
  try {
    decode_dump(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::size_mismatch);
    const std::string msg = e.what();
    EXPECT_NE(msg.find(std::to_string(full)), std::string::npos) << msg;
    EXPECT_NE(msg.find(std::to_string(full - 3)), std::string::npos) << msg;
  }
}

TEST(LogitDump, TrailingBytesRejected) {
  Rng rng(5);
  auto b = encode_dump(random_dump(rng));
  b.push_back(0);
  EXPECT_EQ(error_code_of([&] { decode_dump(b); }), Errc::size_mismatch);
}

TEST(LogitDump, MissingFileIsIoFailure) {
  EXPECT_EQ(error_code_of([] { read_dump("/nonexistent/x.swarlog"); }), Errc::io_failure);
}

TEST(RunRecordFormat, RoundTripsRandomRecords) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const auto run = random_run(rng);
    const auto bytes = encode_run(run);
    const auto back = decode_run(bytes);
    ASSERT_EQ(back, run);
    ASSERT_EQ(encode_run(back), bytes);
  }
}

TEST(RunRecordFormat, FileRoundTrip) {
  Rng rng(7);
  const auto run = random_run(rng);
  const auto path = scratch_dir("run") / "r.swarrun";
  write_run(path, run);
  EXPECT_EQ(read_run(path), run);
}

TEST(RunRecordFormat, EveryTruncationIsATypedError) {
  Rng rng(8);
  const auto bytes = encode_run(random_run(rng));
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    EXPECT_THROW(decode_run(std::span(bytes.data(), n)), Error) << n;
  }
}

TEST(RunRecordFormat, CorruptedBytesNeverCrash) {
  Rng rng(9);
  const auto bytes = encode_run(random_run(rng));
  for (int trial = 0; trial < 2000; ++trial) {
    auto b = bytes;
    const int flips = 1 + static_cast<int>(rng.index(4));
    for (int f = 0; f < flips; ++f) b[rng.index(b.size())] = static_cast<std::uint8_t>(rng.next());
    try {
      decode_run(b);
    } catch (const Error&) {
    }
  }
}

TEST(RunRecordFormat, CorruptedDumpsNeverCrash) {
  Rng rng(10);
  const auto bytes = encode_dump(random_dump(rng));
  for (int trial = 0; trial < 2000; ++trial) {
    auto b = bytes;
    b[rng.index(b.size())] = static_cast<std::uint8_t>(rng.next());
    if (rng.uniform() < 0.3) b.resize(rng.index(b.size()));
    try {
      decode_dump(b);
    } catch (const Error&) {
    }
  }
}

TEST(Mask, P5AllWhiteIsAllForeground) {
  auto b = bytes_of("P5\n4 4\n255\n");
  b.insert(b.end(), 16, 255);
  EXPECT_EQ(parse_mask(b), SegMask::filled({4, 4}, true));
}

TEST(Mask, P5ThresholdsAt127) {
  auto b = bytes_of("P5 2 1 255 ");
  b.push_back(127);
  b.push_back(128);
  EXPECT_EQ(parse_mask(b), SegMask({1, 2}, {0, 1}));
}

TEST(Mask, P1AlternatingBitsIsCheckerboard) {
  const auto m = parse_mask(bytes_of("P1\n# comment\n3 2\n1 0 1\n0 1 0\n"));
  EXPECT_EQ(m, SegMask({2, 3}, {1, 0, 1, 0, 1, 0}));
  EXPECT_EQ(parse_mask(bytes_of("P1 2 2 1001")), SegMask({2, 2}, {1, 0, 0, 1}));
}

TEST(Mask, P5TruncatedPayload) {
  auto b = bytes_of("P5\n4 4\n255\n");
  b.insert(b.end(), 15, 255);
  try {
    parse_mask(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::size_mismatch);
    EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("15"), std::string::npos);
  }
}

TEST(Mask, UnsupportedFormatAndDimensionMismatch) {
  EXPECT_EQ(error_code_of([] { parse_mask(bytes_of("P6\n1 1\n255\nabc")); }), Errc::unsupported_format);
  EXPECT_EQ(error_code_of([] { parse_mask(bytes_of("GIF89a")); }), Errc::unsupported_format);
  EXPECT_EQ(error_code_of([] { parse_mask(bytes_of("P1 2 2 1001"), GridShape{3, 3}); }), Errc::dimension_mismatch);
}

TEST(Mask, WriteReadRoundTrip) {
  const SegMask m({3, 5}, {1, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 0, 0, 0, 1});
  const auto path = scratch_dir("mask") / "m.pgm";
  write_mask(path, m);
  EXPECT_EQ(read_mask(path, GridShape{3, 5}), m);
}

TEST(Heatmaps, UniformFieldIsMidGray) {
  const ScaleSchedule s({{1, 1}, {2, 3}}, 1.0);
  const VocabSpec v(2);
  std::vector<double> same(12);
  for (std::size_t i = 0; i < 6; ++i) same[2 * i] = 0.5;
  RunRecord run{s, SchemeKind::cfg, 0, 0, {}, std::nullopt, std::nullopt};
  run.steps.push_back({TokenMap({1, 1}, {0}, v), GuidanceField::zeros({1, 1}, v), std::nullopt, std::nullopt});
  run.steps.push_back({TokenMap({2, 3}, std::vector<std::uint32_t>(6, 0), v), GuidanceField({2, 3}, v, same), 1.0,
                       std::nullopt});
  const auto dir = scratch_dir("heat_uniform");
  export_heatmaps(run, dir);
  const auto pgm = read_file(dir / "step_1.pgm");
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 6);
  EXPECT_EQ(std::string(pgm.begin(), pgm.begin() + header.size()), header);
  for (std::size_t i = header.size(); i < pgm.size(); ++i) EXPECT_EQ(pgm[i], 128);
  EXPECT_FALSE(std::filesystem::exists(dir / "step_0.pgm"));
  EXPECT_TRUE(std::filesystem::exists(dir / "annotations.txt"));
}

TEST(Heatmaps, PlantedForegroundIsBrighterAndCsvMatchesNorms) {
  SceneOracleConfig c;
  c.vocab = VocabSpec(12);
  c.classes = 3;
  c.scales = {{1, 1}, {2, 2}, {4, 4}};
  c.texture = 0.0;
  c.smoothness = 0.0;
  using K = SceneShape::Kind;
  c.shapes = {{K::rectangle, 0.5, 0.25, 0.5, 0.25},
              {K::rectangle, 0.25, 0.75, 0.25, 0.25},
              {K::rectangle, 0.75, 0.75, 0.25, 0.25}};
  const SceneOracle oracle(c);
  SamplerConfig sc;
  sc.scheme = {SchemeKind::cfg, {}};
  sc.schedule = ScaleSchedule(c.scales, 1.5);
  const auto run = run_sampling(oracle, sc, 0);
  const auto dir = scratch_dir("heat_planted");
  export_heatmaps(run, dir);

  const auto mask = oracle.foreground_mask(0);
  const auto pgm = read_file(dir / "step_2.pgm");
  const std::size_t body = pgm.size() - 16;
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 16; ++j) {
      if (mask.at(static_cast<std::size_t>(i)) && !mask.at(static_cast<std::size_t>(j))) {
        EXPECT_GT(pgm[body + i], pgm[body + j]);
      }
    }
  }

  for (std::size_t k = 1; k < 3; ++k) {
    GridShape shape;
    const auto values = read_heatmap_csv(dir / ("step_" + std::to_string(k) + ".csv"), &shape);
    EXPECT_EQ(shape, run.steps[k].field.shape());
    const auto norms = position_norms(run.steps[k].field);
    ASSERT_EQ(values.size(), norms.size());
    for (std::size_t i = 0; i < norms.size(); ++i) EXPECT_NEAR(values[i], norms[i], 5e-6 * std::abs(norms[i]));
  }
}
