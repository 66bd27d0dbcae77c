#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "swar/io.hpp"
#include "swar/metrics.hpp"

namespace swar {

namespace {

std::string format_g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string format_score(std::optional<double> v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace

std::vector<std::filesystem::path> export_heatmaps(const RunRecord& run, const std::filesystem::path& dir) {
  if (run.steps.empty()) throw Error(Errc::invalid_argument, "run has no recorded guidance field");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_failure, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  std::string notes = "# step height width evenness divergence\n";
  for (std::size_t k = 1; k < run.steps.size(); ++k) {
    const auto& field = run.steps[k].field;
    const auto norms = position_norms(field);
    const int h = field.height(), w = field.width();

    std::string csv;
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        if (c) csv += ',';
        csv += format_g6(norms[static_cast<std::size_t>(r) * w + c]);
      }
      csv += '\n';
    }
    const auto csv_path = dir / ("step_" + std::to_string(k) + ".csv");
    write_text(csv_path, csv);
    written.push_back(csv_path);

    const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
    const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    Bytes pgm(header.begin(), header.end());
    for (double m : norms) {
      const double level = *hi > *lo ? std::round((m - *lo) / (*hi - *lo) * 255.0) : 128.0;
      pgm.push_back(static_cast<std::uint8_t>(std::clamp(level, 0.0, 255.0)));
    }
    const auto pgm_path = dir / ("step_" + std::to_string(k) + ".pgm");
    write_file(pgm_path, pgm);
    written.push_back(pgm_path);

    notes += std::to_string(k) + " " + std::to_string(h) + " " + std::to_string(w) + " " +
             format_score(run.steps[k].evenness) + " " + format_score(run.steps[k].divergence) + "\n";
  }
  notes += "aggregate - - " + format_score(run.evenness) + " " + format_score(run.divergence) + "\n";
  const auto notes_path = dir / "annotations.txt";
  write_text(notes_path, notes);
  written.push_back(notes_path);
  return written;
}

std::vector<double> read_heatmap_csv(const std::filesystem::path& path, GridShape* shape) {
  const auto bytes = read_file(path);
  std::istringstream in(std::string(bytes.begin(), bytes.end()));
  std::vector<double> values;
  std::string line;
  int rows = 0, cols = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    int count = 0;
    while (std::getline(cells, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw Error(Errc::parse_error, "bad CSV cell \"" + cell + "\" in row " + std::to_string(rows));
      }
      ++count;
    }
    if (cols >= 0 && count != cols) throw Error(Errc::parse_error, "ragged CSV row " + std::to_string(rows));
    cols = count;
    ++rows;
  }
  if (shape) *shape = {rows, std::max(cols, 0)};
  return values;
}

}  // namespace swar
