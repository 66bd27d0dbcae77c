#include <gtest/gtest.h>

#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "swar/cli.hpp"
#include "swar/io.hpp"
#include "swar/sim.hpp"
#include "test_util.hpp"

using namespace swar;
using swar::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result swarg(std::vector<std::string> args) {
  args.insert(args.begin(), "swarg");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Relative path -> contents for every file below `root`.
std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return files;
}

}  // namespace

TEST(ParseSeeds, CountAndList) {
  EXPECT_EQ(cli::parse_seeds("3"), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(cli::parse_seeds("7,2,9"), (std::vector<std::uint64_t>{7, 2, 9}));
  EXPECT_ANY_THROW(cli::parse_seeds("0"));
  EXPECT_ANY_THROW(cli::parse_seeds("1,1"));
  EXPECT_ANY_THROW(cli::parse_seeds("x"));
  EXPECT_ANY_THROW(cli::parse_seeds("-3"));
}

TEST(ParseScales, SquareAndRectangular) {
  EXPECT_EQ(cli::parse_scales("1,2x3,4"), (std::vector<GridShape>{{1, 1}, {2, 3}, {4, 4}}));
  EXPECT_ANY_THROW(cli::parse_scales("1,0"));
  EXPECT_ANY_THROW(cli::parse_scales("2xq"));
}

TEST(Cli, SampleWritesOneRecordPerSeed) {
  const auto dir = scratch_dir("cli_sample");
  const auto r = swarg({"sample", "--oracle", "scene", "--scheme", "igg", "--w", "1.85", "--seeds", "10", "--out",
                        dir.string(), "--jobs", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int s = 0; s < 10; ++s) {
    const auto run = read_run(dir / ("seed_" + std::to_string(s)) / "run.swarrun");
    EXPECT_EQ(run.seed, static_cast<std::uint64_t>(s));
    EXPECT_EQ(run.scheme, SchemeKind::igg);
    EXPECT_TRUE(fs::exists(dir / ("seed_" + std::to_string(s)) / "heatmaps" / "step_5.pgm"));
  }
  EXPECT_NE(r.out.find("runs=10"), std::string::npos);
  EXPECT_NE(r.out.find("evenness="), std::string::npos);
  EXPECT_NE(r.err.find("no --mask"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "summary.tsv"));
}

TEST(Cli, ZeroWeightCfgMatchesNone) {
  const auto a = scratch_dir("cli_cfg0"), b = scratch_dir("cli_none");
  ASSERT_EQ(swarg({"sample", "--scheme", "cfg", "--w", "0", "--seeds", "4,9", "--out", a.string()}).code, 0);
  ASSERT_EQ(swarg({"sample", "--scheme", "none", "--seeds", "4,9", "--out", b.string()}).code, 0);
  for (const char* s : {"seed_4", "seed_9"}) {
    const auto x = read_run(a / s / "run.swarrun"), y = read_run(b / s / "run.swarrun");
    for (std::size_t k = 0; k < x.steps.size(); ++k) EXPECT_EQ(x.steps[k].token_map, y.steps[k].token_map);
  }
}

TEST(Cli, MissingDumpIsAConfigErrorNamingThePath) {
  const auto r = swarg({"sample", "--oracle", "dump", "--dump", "/nowhere/model.swarlog"});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("/nowhere/model.swarlog"), std::string::npos);
}

TEST(Cli, UnknownFlagsAndBadValuesAreErrors) {
  EXPECT_EQ(swarg({"sample", "--frobnicate", "1"}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({"sample", "--scheme", "pag"}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({"sample", "--w", "abc"}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({"sample", "--temperature", "0"}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({"sample", "--top-k", "65"}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({"sample", "--condition", "9"}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({"sample", "--scheme", "mixed", "--w", "0.75"}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({}).code, cli::kExitConfig);
}

TEST(Cli, HelpDocumentsEveryFlag) {
  const auto r = swarg({"sample", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--oracle", "--dump", "--mask", "--scheme", "--w", "--w2", "--schedule", "--temperature",
                           "--top-k", "--seeds", "--out", "--jobs", "--config"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  EXPECT_NE(r.out.find("igg-window"), std::string::npos);
}

TEST(Cli, ConfigFileWithFlagsWinning) {
  const auto dir = scratch_dir("cli_config");
  write_text(dir / "exp.cfg", "# experiment\nscheme = igg\nw = 1.85\nseeds = 2\nout = " + (dir / "a").string() + "\n");
  ASSERT_EQ(swarg({"sample", "--config", (dir / "exp.cfg").string(), "--scheme", "cfg"}).code, 0);
  EXPECT_EQ(read_run(dir / "a" / "seed_1" / "run.swarrun").scheme, SchemeKind::cfg);
  EXPECT_EQ(read_run(dir / "a" / "seed_1" / "run.swarrun").schedule.weight(), 1.85);
  EXPECT_FALSE(fs::exists(dir / "a" / "seed_2"));

  write_text(dir / "bad.cfg", "colour = blue\n");
  EXPECT_EQ(swarg({"sample", "--config", (dir / "bad.cfg").string()}).code, cli::kExitConfig);
  EXPECT_EQ(swarg({"sample", "--config", (dir / "absent.cfg").string()}).code, cli::kExitConfig);
}

TEST(Cli, SceneMaskScoresDivergence) {
  const auto dir = scratch_dir("cli_mask");
  const auto r = swarg({"sample", "--scheme", "igg", "--w", "1.85", "--seeds", "2", "--mask", "scene", "--out",
                        dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(read_run(dir / "seed_0" / "run.swarrun").divergence);
  EXPECT_EQ(r.out.find("n/a"), std::string::npos);
}

TEST(Cli, MaskOfWrongSizeIsAFormatError) {
  const auto dir = scratch_dir("cli_mask_size");
  write_mask(dir / "m.pgm", SegMask::filled({8, 8}, true));
  const auto r = swarg({"sample", "--mask", (dir / "m.pgm").string(), "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitFormat);
  EXPECT_NE(r.err.find("dimension-mismatch"), std::string::npos);
}

TEST(Cli, CompareWithItselfGivesIdenticalColumns) {
  const auto dir = scratch_dir("cli_self");
  write_text(dir / "a.cfg", "scheme=cfg\nw=1.75\nseeds=2\nmask=scene\n");
  const auto r = swarg({"compare", "--config-a", (dir / "a.cfg").string(), "--config-b", (dir / "a.cfg").string(),
                        "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream lines(r.out);
  std::string line;
  int checked = 0;
  while (std::getline(lines, line)) {
    std::istringstream words(line);
    std::vector<std::string> w{std::istream_iterator<std::string>(words), {}};
    if (!w.empty() && (w[0] == "evenness" || w[0] == "divergence")) {
      ASSERT_EQ(w.size(), 7u) << line;  // label, then "mean +- sd" twice
      EXPECT_EQ(std::vector<std::string>(w.begin() + 1, w.begin() + 4),
                std::vector<std::string>(w.begin() + 4, w.end()));
      EXPECT_NE(w[3], "0.0000");  // two seeds give a real spread
      ++checked;
    }
  }
  EXPECT_EQ(checked, 2);
  EXPECT_NE(r.out.find("ties 2"), std::string::npos);
  EXPECT_EQ(slurp(dir / "report.txt"), r.out);
}

TEST(Cli, CompareShowsIggDirection) {
  const auto dir = scratch_dir("cli_compare");
  write_text(dir / "a.cfg", "scheme=cfg\nw=1.85\nseeds=50\nmask=scene\n");
  write_text(dir / "b.cfg", "scheme=igg\nw=1.85\nseeds=50\nmask=scene\n");
  const auto r = swarg({"compare", "--config-a", (dir / "a.cfg").string(), "--config-b", (dir / "b.cfg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("sign test evenness:   B>A 0, B<A 50"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("sign test divergence: B>A 50, B<A 0"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("12x12"), std::string::npos);
}

TEST(Cli, CompareRejectsDifferentSeedsOrOracles) {
  const auto dir = scratch_dir("cli_compare_bad");
  write_text(dir / "a.cfg", "scheme=cfg\nseeds=3\n");
  write_text(dir / "b.cfg", "scheme=igg\nseeds=4\n");
  write_text(dir / "c.cfg", "scheme=igg\nseeds=3\ncontrast=0.9\n");
  const auto r = swarg({"compare", "--config-a", (dir / "a.cfg").string(), "--config-b", (dir / "b.cfg").string()});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("seed-set-mismatch"), std::string::npos);
  EXPECT_EQ(swarg({"compare", "--config-a", (dir / "a.cfg").string(), "--config-b", (dir / "c.cfg").string()}).code,
            cli::kExitConfig);
}

TEST(Cli, AnalyzeOfSceneDumpMatchesLiveRun) {
  const auto dir = scratch_dir("cli_analyze");
  const SceneOracle oracle([] {
    SceneOracleConfig c;
    c.seed = 5;
    return c;
  }());
  write_mask(dir / "m.pgm", oracle.foreground_mask(2));
  ASSERT_EQ(swarg({"dump", "--condition", "2", "--oracle-seed", "5", "--file", (dir / "d.swarlog").string()}).code, 0);
  const auto live = swarg({"sample", "--condition", "2", "--oracle-seed", "5", "--scheme", "igg", "--w", "1.5",
                           "--seeds", "3", "--mask", (dir / "m.pgm").string(), "--out", (dir / "live").string()});
  ASSERT_EQ(live.code, 0) << live.err;
  const auto replay = swarg({"analyze", "--dump", (dir / "d.swarlog").string(), "--condition", "2", "--scheme", "igg",
                             "--w", "1.5", "--seeds", "3", "--mask", (dir / "m.pgm").string(), "--out",
                             (dir / "replay").string()});
  ASSERT_EQ(replay.code, 0) << replay.err;
  EXPECT_EQ(tree(dir / "live"), tree(dir / "replay"));
  EXPECT_NE(replay.out.find("step\tgrid"), std::string::npos);
}

TEST(Cli, AnalyzeWithFullMaskReportsSkip) {
  const auto dir = scratch_dir("cli_full_mask");
  ASSERT_EQ(swarg({"dump", "--file", (dir / "d.swarlog").string()}).code, 0);
  write_mask(dir / "m.pgm", SegMask::filled({12, 12}, true));
  const auto r = swarg({"analyze", "--dump", (dir / "d.swarlog").string(), "--mask", (dir / "m.pgm").string(),
                        "--seeds", "2", "--out", (dir / "o").string()});
  EXPECT_EQ(r.code, cli::kExitDegenerate);
  EXPECT_NE(r.out.find("skipped"), std::string::npos);
  EXPECT_NE(r.err.find("empty-background"), std::string::npos);
}

TEST(Cli, AnalyzeOfDisjointDumpStaysBounded) {
  const auto dir = scratch_dir("cli_disjoint");
  // Guidance only on the left half: conditional logits differ there alone.
  const std::vector<GridShape> scales{{1, 1}, {2, 2}, {4, 4}};
  LogitDump d{VocabSpec(4), {}};
  for (const auto& s : scales) {
    std::vector<double> cond(s.positions() * 4, 0.0);
    for (int r = 0; r < s.height; ++r) {
      for (int c = 0; c < s.width / 2; ++c) cond[(r * s.width + c) * 4] = 3.0;
    }
    d.steps.push_back({LogitTensor(s, VocabSpec(4), cond), LogitTensor::zeros(s, VocabSpec(4))});
  }
  write_dump(dir / "d.swarlog", d);
  std::vector<std::uint8_t> bits(16);
  for (int r = 0; r < 4; ++r) bits[r * 4] = bits[r * 4 + 1] = 1;
  write_mask(dir / "m.pgm", SegMask({4, 4}, bits));
  const auto r = swarg({"analyze", "--dump", (dir / "d.swarlog").string(), "--mask", (dir / "m.pgm").string(),
                        "--scheme", "cfg", "--w", "2", "--out", (dir / "o").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto run = read_run(dir / "o" / "seed_0" / "run.swarrun");
  ASSERT_TRUE(run.divergence);
  EXPECT_LE(*run.divergence, 1.0);
  EXPECT_GT(*run.divergence, 0.99);
}

TEST(Cli, CorruptDumpIsAFormatError) {
  const auto dir = scratch_dir("cli_corrupt");
  write_text(dir / "d.swarlog", "SWARLOGX\x02\0\0\0");
  write_mask(dir / "m.pgm", SegMask::filled({2, 2}, true));
  const auto r = swarg({"analyze", "--dump", (dir / "d.swarlog").string(), "--mask", (dir / "m.pgm").string()});
  EXPECT_EQ(r.code, cli::kExitFormat);
  EXPECT_NE(r.err.find("bad-magic"), std::string::npos);
}

TEST(Cli, RerunIsByteIdentical) {
  const auto a = scratch_dir("cli_rerun_a"), b = scratch_dir("cli_rerun_b");
  for (const auto& dir : {a, b}) {
    ASSERT_EQ(swarg({"sample", "--scheme", "igg-window", "--w", "1.85", "--seeds", "4", "--mask", "scene", "--jobs",
                     dir == a ? "1" : "4", "--out", dir.string()})
                  .code,
              0);
  }
  const auto ta = tree(a);
  EXPECT_EQ(ta.size(), 4u * 12u + 1u);
  EXPECT_EQ(ta, tree(b));
}
