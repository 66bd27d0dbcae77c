#include "swar/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <memory>
#include <ostream>
#include <sstream>
#include <thread>

#include "swar/io.hpp"
#include "swar/metrics.hpp"
#include "swar/sim.hpp"

namespace swar::cli {

namespace {

/// Configuration problem detected before any run starts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr std::uint64_t kDivergenceStream = 0xd1f;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::bad_magic:
    case Errc::size_mismatch:
    case Errc::parse_error:
    case Errc::unsupported_format:
    case Errc::dimension_mismatch:
    case Errc::non_finite_value:
      return kExitFormat;
    default:
      return kExitConfig;
  }
}

std::string fmt_score(std::optional<double> v, int digits = 4) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, *v);
  return buf;
}

struct Stats {
  std::size_t n = 0;
  double mean = 0.0;
  double stddev = 0.0;
};

Stats stats(const std::vector<double>& xs) {
  Stats s;
  s.n = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::string fmt_stats(const std::vector<double>& xs) {
  if (xs.empty()) return "-";
  const auto s = stats(xs);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f +- %.4f", s.mean, s.stddev);
  return buf;
}

/// Two-sided exact sign test over the untied pairs.
double sign_test_p(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  if (n == 0) return 1.0;
  const std::size_t tail = std::min(wins, losses);
  double p = 0.0;
  for (std::size_t i = 0; i <= tail; ++i) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
    p += std::exp(log_choose - static_cast<double>(n) * std::log(2.0));
  }
  return std::min(1.0, 2.0 * p);
}

struct RunOutcome {
  std::uint64_t seed = 0;
  std::optional<RunRecord> run;
  std::string error;
  int error_code = kExitOk;
  std::optional<std::string> divergence_skipped;
};

struct Experiment {
  ExperimentConfig config;
  std::vector<std::uint64_t> seeds;
  GuidanceScheme scheme;
  std::shared_ptr<const ReplayOracle> replay;
  std::optional<SceneOracleConfig> scene;
  std::vector<GridShape> scales;
  std::optional<SegMask> mask;
};

ScaleSchedule schedule_for(const Experiment& e) {
  const auto kind = parse_schedule_kind(e.config.schedule);
  return ScaleSchedule(e.scales, e.config.w, *kind, e.config.w2);
}

Experiment prepare(const ExperimentConfig& config, std::ostream& err) {
  Experiment e;
  e.config = config;
  e.seeds = parse_seeds(config.seeds);
  const auto kind = parse_scheme_kind(config.scheme);
  if (!kind) throw ConfigError("unknown scheme \"" + config.scheme + "\"");
  e.scheme.kind = *kind;
  if (config.window) {
    if (*config.window < 1) throw ConfigError("--window must be at least 1");
    e.scheme.window = {WindowRule::Kind::fixed, *config.window};
  }
  if (!parse_schedule_kind(config.schedule)) throw ConfigError("unknown schedule \"" + config.schedule + "\"");
  if (*kind == SchemeKind::mixed && !config.w2) throw ConfigError("the mixed scheme needs --w2");
  if (!(config.temperature > 0.0)) throw ConfigError("--temperature must be positive");

  std::uint32_t vocab = config.vocab;
  if (config.oracle == "dump") {
    if (config.dump_path.empty()) throw ConfigError("--oracle dump needs --dump <path>");
    if (!std::filesystem::exists(config.dump_path)) throw ConfigError("dump file not found: " + config.dump_path);
    e.replay = std::make_shared<const ReplayOracle>(replay_oracle(config.dump_path));
    e.scales = e.replay->scales();
    vocab = static_cast<std::uint32_t>(e.replay->vocab().size());
  } else if (config.oracle == "scene") {
    SceneOracleConfig sc;
    sc.vocab = VocabSpec(config.vocab);
    sc.scales = parse_scales(config.scales);
    sc.classes = config.classes;
    sc.contrast = config.contrast;
    sc.smoothness = config.smoothness;
    sc.texture = config.texture;
    sc.texture_spread = config.texture_spread;
    sc.seed = config.oracle_seed.value_or(0);
    // Validates the configuration and the condition up front.
    const SceneOracle probe(sc);
    probe.region(config.condition, sc.scales.back());
    e.scene = probe.config();
    e.scales = sc.scales;
  } else {
    throw ConfigError("unknown oracle \"" + config.oracle + "\"");
  }
  if (config.top_k && (*config.top_k == 0 || *config.top_k > vocab)) {
    throw ConfigError("--top-k must lie in [1, " + std::to_string(vocab) + "]");
  }
  schedule_for(e);

  if (config.mask.empty()) {
    err << "warning: no --mask given; reporting evenness only\n";
  } else if (config.mask == "scene") {
    if (!e.scene) throw ConfigError("--mask scene needs the scene oracle");
    e.mask = SceneOracle(*e.scene).foreground_mask(config.condition);
  } else {
    if (!std::filesystem::exists(config.mask)) throw ConfigError("mask file not found: " + config.mask);
    e.mask = read_mask(config.mask, e.scales.back());
  }
  return e;
}

RunOutcome run_one(const Experiment& e, std::uint64_t seed) {
  RunOutcome outcome;
  outcome.seed = seed;
  try {
    SamplerConfig sampler;
    sampler.scheme = e.scheme;
    sampler.schedule = schedule_for(e);
    sampler.temperature = e.config.temperature;
    sampler.top_k = e.config.top_k;
    sampler.seed = seed;

    RunRecord run = [&] {
      if (e.replay) return run_sampling(*e.replay, sampler, e.config.condition);
      SceneOracleConfig sc = *e.scene;
      sc.seed = e.config.oracle_seed.value_or(seed);
      return run_sampling(SceneOracle(sc), sampler, e.config.condition);
    }();

    if (e.mask) {
      try {
        score_divergence(run, *e.mask, mix64(seed, kDivergenceStream));
        if (!run.divergence) outcome.divergence_skipped = "no step keeps both foreground and background";
      } catch (const Error& err) {
        if (err.code() != Errc::empty_foreground && err.code() != Errc::empty_background &&
            err.code() != Errc::invalid_argument) {
          throw;
        }
        outcome.divergence_skipped = err.what();
      }
    }
    outcome.run = std::move(run);
  } catch (const Error& err) {
    outcome.error = err.what();
    outcome.error_code = exit_code_for(err);
  } catch (const std::exception& err) {
    outcome.error = err.what();
    outcome.error_code = kExitConfig;
  }
  return outcome;
}

std::vector<RunOutcome> run_all(const Experiment& e) {
  std::vector<RunOutcome> outcomes(e.seeds.size());
  unsigned jobs = e.config.jobs ? e.config.jobs : std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, e.seeds.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < e.seeds.size(); i = next++) outcomes[i] = run_one(e, e.seeds[i]);
  };
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return outcomes;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

/// Writes per-seed records and heatmaps plus summary.tsv; returns the exit code.
int emit_runs(const Experiment& e, const std::vector<RunOutcome>& outcomes, bool per_step, std::ostream& out,
              std::ostream& err) {
  const std::filesystem::path root = e.config.out;
  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  if (ec) {
    err << "error: cannot create " << root.string() << ": " << ec.message() << "\n";
    return kExitConfig;
  }

  std::vector<double> evenness, divergence;
  std::string summary = "seed\tevenness\tdivergence\tnote\n";
  std::size_t skipped = 0;
  for (const auto& o : outcomes) {
    if (!o.run) {
      err << "error: seed " << o.seed << ": " << o.error << "\n";
      return o.error_code;
    }
    const auto dir = root / ("seed_" + std::to_string(o.seed));
    std::filesystem::create_directories(dir, ec);
    write_run(dir / "run.swarrun", *o.run);
    export_heatmaps(*o.run, dir / "heatmaps");
    if (o.run->evenness) evenness.push_back(*o.run->evenness);
    if (o.run->divergence) divergence.push_back(*o.run->divergence);
    std::string note;
    if (o.divergence_skipped) {
      ++skipped;
      note = "divergence skipped: " + *o.divergence_skipped;
      err << "warning: seed " << o.seed << ": " << note << "\n";
    }
    summary += std::to_string(o.seed) + "\t" + fmt_score(o.run->evenness, 6) + "\t" +
               fmt_score(o.run->divergence, 6) + "\t" + note + "\n";
  }
  write_text(root / "summary.tsv", summary);

  if (per_step) {
    const auto& first = *outcomes.front().run;
    out << "step\tgrid\tevenness\tdivergence\n";
    for (std::size_t k = 1; k < first.steps.size(); ++k) {
      std::vector<double> ev, dv;
      for (const auto& o : outcomes) {
        if (o.run->steps[k].evenness) ev.push_back(*o.run->steps[k].evenness);
        if (o.run->steps[k].divergence) dv.push_back(*o.run->steps[k].divergence);
      }
      const auto shape = first.schedule.step(k);
      out << k << "\t" << shape.height << "x" << shape.width << "\t"
          << (ev.empty() ? "-" : fmt_score(stats(ev).mean)) << "\t"
          << (dv.empty() ? "skipped" : fmt_score(stats(dv).mean)) << "\n";
    }
  }

  out << "runs=" << outcomes.size() << " scheme=" << e.config.scheme << " evenness=" << fmt_stats(evenness)
      << " divergence=";
  if (!e.mask) {
    out << "n/a (no mask)";
  } else if (divergence.empty()) {
    out << "skipped (" << (outcomes.empty() || !outcomes.front().divergence_skipped
                               ? std::string("no scored step")
                               : *outcomes.front().divergence_skipped)
        << ")";
  } else {
    out << fmt_stats(divergence);
  }
  out << "\n";

  if (e.mask && !outcomes.empty() && skipped == outcomes.size()) return kExitDegenerate;
  return kExitOk;
}

template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

std::string describe(const ExperimentConfig& c) {
  std::string s = c.scheme + " w=" + fmt_score(c.w, 2);
  if (c.w2) s += " w2=" + fmt_score(*c.w2, 2);
  s += " " + c.schedule;
  return s;
}

bool same_oracle(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.oracle == b.oracle && a.dump_path == b.dump_path && a.vocab == b.vocab && a.classes == b.classes &&
         a.contrast == b.contrast && a.smoothness == b.smoothness && a.texture == b.texture &&
         a.texture_spread == b.texture_spread && a.scales == b.scales && a.oracle_seed == b.oracle_seed &&
         a.condition == b.condition && a.mask == b.mask;
}

}  // namespace

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  auto number = [&](const std::string& token) -> std::uint64_t {
    try {
      std::size_t used = 0;
      if (token.empty() || token[0] == '-') throw std::invalid_argument("negative");
      const auto v = std::stoull(token, &used);
      if (used != token.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("invalid seed \"" + token + "\" in --seeds");
    }
  };
  std::vector<std::uint64_t> seeds;
  if (text.find(',') == std::string::npos) {
    const auto count = number(text);
    if (count == 0) throw ConfigError("--seeds count must be positive");
    for (std::uint64_t s = 0; s < count; ++s) seeds.push_back(s);
    return seeds;
  }
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    if (!token.empty()) seeds.push_back(number(token));
  }
  if (seeds.empty()) throw ConfigError("--seeds lists no seed");
  auto sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw ConfigError("--seeds repeats a seed");
  return seeds;
}

std::vector<GridShape> parse_scales(const std::string& text) {
  std::vector<GridShape> scales;
  std::stringstream in(text);
  std::string token;
  auto side = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size() || v < 1) throw std::invalid_argument("bad");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("invalid scale \"" + token + "\" in --scales");
    }
  };
  while (std::getline(in, token, ',')) {
    if (token.empty()) continue;
    const auto x = token.find('x');
    if (x == std::string::npos) {
      const int s = side(token);
      scales.push_back({s, s});
    } else {
      scales.push_back({side(token.substr(0, x)), side(token.substr(x + 1))});
    }
  }
  if (scales.empty()) throw ConfigError("--scales lists no scale");
  return scales;
}

int cmd_sample(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto e = prepare(config, err);
    return emit_runs(e, run_all(e), false, out, err);
  });
}

int cmd_analyze(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.dump_path.empty()) throw ConfigError("analyze needs --dump <path>");
    if (config.mask.empty()) throw ConfigError("analyze needs --mask <path>");
    ExperimentConfig c = config;
    c.oracle = "dump";
    const auto e = prepare(c, err);
    return emit_runs(e, run_all(e), true, out, err);
  });
}

int cmd_dump(const ExperimentConfig& config, const std::filesystem::path& path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (config.oracle != "scene") throw ConfigError("dump records the scene oracle only");
    const auto e = prepare(config, err);
    SceneOracleConfig sc = *e.scene;
    sc.seed = config.oracle_seed.value_or(0);
    write_dump(path, record_dump(SceneOracle(sc), config.condition));
    out << "wrote " << path.string() << " (" << e.scales.size() << " steps, condition " << config.condition
        << ", oracle seed " << sc.seed << ")\n";
    return kExitOk;
  });
}

int cmd_compare(const ExperimentConfig& a, const ExperimentConfig& b, const std::filesystem::path& report_dir,
                std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!same_oracle(a, b)) throw ConfigError("compared configurations must share oracle, condition and mask");
    const auto ea = prepare(a, err);
    const auto eb = prepare(b, err);
    if (ea.seeds != eb.seeds) throw Error(Errc::seed_set_mismatch, "compared configurations use different seeds");
    if (ea.scales != eb.scales) throw ConfigError("compared configurations use different scales");

    const auto ra = run_all(ea);
    const auto rb = run_all(eb);
    for (const auto* side : {&ra, &rb}) {
      for (const auto& o : *side) {
        if (!o.run) {
          err << "error: seed " << o.seed << ": " << o.error << "\n";
          return o.error_code;
        }
      }
    }

    auto collect = [](const std::vector<RunOutcome>& rs, bool div, std::optional<std::size_t> step) {
      std::vector<double> xs;
      for (const auto& o : rs) {
        const auto v = step ? (div ? o.run->steps[*step].divergence : o.run->steps[*step].evenness)
                            : (div ? o.run->divergence : o.run->evenness);
        if (v) xs.push_back(*v);
      }
      return xs;
    };
    auto sign = [&](bool div) {
      std::size_t wins = 0, losses = 0;
      for (std::size_t i = 0; i < ra.size(); ++i) {
        const auto va = div ? ra[i].run->divergence : ra[i].run->evenness;
        const auto vb = div ? rb[i].run->divergence : rb[i].run->evenness;
        if (!va || !vb || *va == *vb) continue;
        (*vb > *va ? wins : losses) += 1;
      }
      char buf[96];
      std::snprintf(buf, sizeof buf, "B>A %zu, B<A %zu, ties %zu, p=%.3g", wins, losses, ra.size() - wins - losses,
                    sign_test_p(wins, losses));
      return std::string(buf);
    };

    std::ostringstream report;
    char line[256];
    std::snprintf(line, sizeof line, "%-12s %-22s %-22s\n", "", ("A: " + describe(a)).c_str(),
                  ("B: " + describe(b)).c_str());
    report << line;
    std::snprintf(line, sizeof line, "%-12s %-22zu %-22zu\n", "runs", ra.size(), rb.size());
    report << line;
    std::snprintf(line, sizeof line, "%-12s %-22s %-22s\n", "evenness", fmt_stats(collect(ra, false, {})).c_str(),
                  fmt_stats(collect(rb, false, {})).c_str());
    report << line;
    std::snprintf(line, sizeof line, "%-12s %-22s %-22s\n", "divergence", fmt_stats(collect(ra, true, {})).c_str(),
                  fmt_stats(collect(rb, true, {})).c_str());
    report << line;
    report << "sign test evenness:   " << sign(false) << "\n";
    report << "sign test divergence: " << (ea.mask ? sign(true) : std::string("n/a (no mask)")) << "\n";
    report << "\nper step\n";
    std::snprintf(line, sizeof line, "%-5s %-7s %-10s %-10s %-10s %-10s\n", "step", "grid", "evn A", "evn B", "div A",
                  "div B");
    report << line;
    auto mean_or_dash = [](const std::vector<double>& xs) {
      return xs.empty() ? std::string("-") : fmt_score(stats(xs).mean);
    };
    for (std::size_t k = 1; k < ea.scales.size(); ++k) {
      const std::string grid = std::to_string(ea.scales[k].height) + "x" + std::to_string(ea.scales[k].width);
      std::snprintf(line, sizeof line, "%-5zu %-7s %-10s %-10s %-10s %-10s\n", k, grid.c_str(),
                    mean_or_dash(collect(ra, false, k)).c_str(), mean_or_dash(collect(rb, false, k)).c_str(),
                    mean_or_dash(collect(ra, true, k)).c_str(), mean_or_dash(collect(rb, true, k)).c_str());
      report << line;
    }

    out << report.str();
    if (!report_dir.empty()) {
      std::filesystem::create_directories(report_dir);
      write_text(report_dir / "report.txt", report.str());
    }
    return kExitOk;
  });
}

namespace {

void add_experiment_options(CLI::App& app, ExperimentConfig& c) {
  app.add_option("--oracle", c.oracle, "Logit source: scene (synthetic) or dump (replayed file)")
      ->check(CLI::IsMember({"scene", "dump"}))
      ->capture_default_str();
  app.add_option("--dump", c.dump_path, "Logit dump to replay (implies --oracle dump)");
  app.add_option("--mask", c.mask, "Foreground mask: PGM/PBM path, or 'scene' for the scene oracle's region");
  app.add_option("--scheme", c.scheme, "Guidance scheme")
      ->check(CLI::IsMember({"none", "cfg", "igg", "igg-window", "mixed"}))
      ->capture_default_str();
  app.add_option("--w", c.w, "Guidance weight w")->capture_default_str();
  app.add_option("--w2", c.w2, "Secondary weight w' of the attention term (mixed scheme)");
  app.add_option("--schedule", c.schedule, "Guidance schedule")
      ->check(CLI::IsMember({"ratio", "fixed"}))
      ->capture_default_str();
  app.add_option("--window", c.window, "Fixed attention window side for igg-window (default round(sqrt(h*w)))");
  app.add_option("--temperature", c.temperature, "Sampling temperature (< 1e-6 samples the argmax)")
      ->capture_default_str();
  app.add_option("--top-k", c.top_k, "Restrict sampling to the k most likely tokens");
  app.add_option("--seeds", c.seeds, "Seed count N (runs seeds 0..N-1) or comma-separated seed list")
      ->capture_default_str();
  app.add_option("--out", c.out, "Output directory")->capture_default_str();
  app.add_option("--jobs", c.jobs, "Worker threads (0 = available parallelism)")->capture_default_str();
  app.add_option("--condition", c.condition, "Class id to condition on")->capture_default_str();
  app.add_option("--vocab", c.vocab, "Scene oracle vocabulary size")->capture_default_str();
  app.add_option("--classes", c.classes, "Scene oracle class count")->capture_default_str();
  app.add_option("--contrast", c.contrast, "Scene oracle logit boost of class tokens in the foreground")
      ->capture_default_str();
  app.add_option("--smoothness", c.smoothness, "Scene oracle blur width of the unconditional logits (cells)")
      ->capture_default_str();
  app.add_option("--texture", c.texture, "Scene oracle class-response texture scale")->capture_default_str();
  app.add_option("--texture-spread", c.texture_spread, "Scene oracle log-normal texture amplitude spread")
      ->capture_default_str();
  app.add_option("--scales", c.scales, "Scene oracle scales: comma-separated sides or HxW")->capture_default_str();
  app.add_option("--oracle-seed", c.oracle_seed, "Fixed scene oracle seed (default: the run seed)");
}

/// key=value lines (blank lines and '#' comments ignored) as --key=value args.
std::vector<std::string> config_file_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::vector<std::string> args;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(number) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    args.push_back("--" + trim(line.substr(0, eq)) + "=" + trim(line.substr(eq + 1)));
  }
  return args;
}

/// Pulls --config <file> / --config=<file> out of `args` and splices the
/// file's settings in front so that explicit flags win.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> rest, from_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw ConfigError("--config needs a file");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    const auto extra = config_file_args(path);
    from_file.insert(from_file.end(), extra.begin(), extra.end());
  }
  from_file.insert(from_file.end(), rest.begin(), rest.end());
  return from_file;
}

int parse_into(CLI::App& app, std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? -1 : kExitConfig;  // -1: help printed, stop
  }
  return kExitOk;
}

ExperimentConfig parse_side(const std::string& path) {
  ExperimentConfig c;
  CLI::App side("compare side");
  side.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  add_experiment_options(side, c);
  auto args = config_file_args(path);
  args.insert(args.begin(), "swarg-compare-side");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  try {
    side.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!c.dump_path.empty()) c.oracle = "dump";
  return c;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Guidance diagnostics for scale-wise autoregressive token sampling", "swarg");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string dump_out;
  std::string config_a, config_b, report_dir;
  unsigned compare_jobs = 0;

  auto* sample = app.add_subcommand("sample", "Sample runs and write records, heatmaps and a summary");
  add_experiment_options(*sample, config);
  sample->add_option("--config", "key=value file with any of the flags above (flags win)")->type_name("FILE");

  auto* analyze = app.add_subcommand("analyze", "Score a replayed logit dump against a mask");
  add_experiment_options(*analyze, config);
  analyze->add_option("--config", "key=value file with any of the flags above (flags win)")->type_name("FILE");

  auto* compare = app.add_subcommand("compare", "Compare two configurations over the same seeds");
  compare->add_option("--config-a", config_a, "key=value file for configuration A")->required();
  compare->add_option("--config-b", config_b, "key=value file for configuration B")->required();
  compare->add_option("--out", report_dir, "Directory for report.txt");
  compare->add_option("--jobs", compare_jobs, "Worker threads (0 = available parallelism)");

  auto* dump = app.add_subcommand("dump", "Record the scene oracle's logits to a dump file");
  add_experiment_options(*dump, config);
  dump->add_option("--file", dump_out, "Dump file to write")->required();
  dump->add_option("--config", "key=value file with any of the flags above (flags win)")->type_name("FILE");

  std::vector<std::string> expanded;
  try {
    if (args.size() >= 2 && (args[1] == "sample" || args[1] == "analyze" || args[1] == "dump")) {
      std::vector<std::string> tail(args.begin() + 2, args.end());
      expanded = {args[0], args[1]};
      for (auto& a : expand_config(tail)) expanded.push_back(std::move(a));
    } else {
      expanded = args;
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  const int parsed = parse_into(app, expanded, out, err);
  if (parsed == -1) return kExitOk;
  if (parsed != kExitOk) return parsed;
  if (!config.dump_path.empty()) config.oracle = "dump";

  if (sample->parsed()) return cmd_sample(config, out, err);
  if (analyze->parsed()) return cmd_analyze(config, out, err);
  if (dump->parsed()) return cmd_dump(config, dump_out, out, err);
  if (compare->parsed()) {
    return guarded(err, [&] {
      auto a = parse_side(config_a);
      auto b = parse_side(config_b);
      a.jobs = b.jobs = compare_jobs;
      return cmd_compare(a, b, report_dir, out, err);
    });
  }
  return kExitConfig;
}

}  // namespace swar::cli
