#pragma once

// Command-line front end. Commands are plain functions over an
// ExperimentConfig so they can be driven without a process boundary.
//
// Exit codes: 0 success, 2 configuration error, 3 format error,
// 4 every run skipped because of degenerate input.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "swar/core.hpp"
#include "swar/guidance.hpp"

namespace swar::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFormat = 3;
inline constexpr int kExitDegenerate = 4;

struct ExperimentConfig {
  std::string oracle = "scene";  // scene | dump
  std::string dump_path;

  // Scene oracle parameters.
  std::uint32_t vocab = 64;
  std::uint32_t classes = 4;
  double contrast = 0.5;
  double smoothness = 1.0;
  double texture = 0.6;
  double texture_spread = 0.5;
  std::string scales = "1,2,4,6,8,12";
  /// Unset: each run uses its own seed as the oracle seed.
  std::optional<std::uint64_t> oracle_seed;
  std::uint32_t condition = 0;

  std::string scheme = "cfg";
  double w = 1.75;
  std::optional<double> w2;
  std::string schedule = "ratio";
  /// Unset: window side round(sqrt(h*w)).
  std::optional<int> window;

  double temperature = 1.0;
  std::optional<std::uint32_t> top_k;
  std::string seeds = "1";

  /// "scene" uses the scene oracle's planted foreground; otherwise a PGM/PBM path.
  std::string mask;
  std::string out = "swar_out";
  unsigned jobs = 0;  // 0: available parallelism
};

/// "N" expands to 0..N-1; "a,b,c" is taken literally.
std::vector<std::uint64_t> parse_seeds(const std::string& text);
/// Comma-separated "s" (square) or "HxW" entries.
std::vector<GridShape> parse_scales(const std::string& text);

int cmd_sample(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
int cmd_analyze(const ExperimentConfig& config, std::ostream& out, std::ostream& err);
/// Writes a report to `out` and, when `report_dir` is non-empty, to report_dir/report.txt.
int cmd_compare(const ExperimentConfig& a, const ExperimentConfig& b, const std::filesystem::path& report_dir,
                std::ostream& out, std::ostream& err);
/// Records the scene oracle's logits for config.condition to `path`.
int cmd_dump(const ExperimentConfig& config, const std::filesystem::path& path, std::ostream& out, std::ostream& err);

/// Full command line (args[0] is the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace swar::cli
