#include "cts/export.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cts {

using nlohmann::json;

namespace {

struct MetricsRun {
  std::vector<std::vector<double>> rows;  // parsed numeric cells
};

MetricsRun read_metrics_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("export: cannot read " + path);
  MetricsRun run;
  std::string line;
  if (!std::getline(is, line))
    throw std::runtime_error("export: empty metrics file " + path);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::runtime_error("export: malformed metrics row in " + path);
      }
    }
    if (cells.size() != 10)
      throw std::runtime_error("export: unexpected column count in " + path);
    run.rows.push_back(std::move(cells));
  }
  return run;
}

void write_curves(const std::vector<MetricsRun>& runs, const std::string& path) {
  size_t rows = runs[0].rows.size();
  for (const auto& r : runs) rows = std::min(rows, r.rows.size());

  std::ofstream os(path);
  if (!os) throw std::runtime_error("export: cannot write " + path);
  os.precision(17);
  os << "iteration,env_steps";
  const char* names[] = {"reward", "success_rate", "episode_length", "epsilon"};
  const int cols[] = {2, 3, 4, 5};
  for (const char* n : names) os << ',' << n << "_mean," << n << "_std";
  os << '\n';

  for (size_t i = 0; i < rows; ++i) {
    os << runs[0].rows[i][0] << ',' << runs[0].rows[i][1];
    for (int k = 0; k < 4; ++k) {
      double sum = 0.0, sum2 = 0.0;
      for (const auto& r : runs) {
        const double v = r.rows[i][static_cast<size_t>(cols[k])];
        sum += v;
        sum2 += v * v;
      }
      const double n = static_cast<double>(runs.size());
      const double mean = sum / n;
      const double var = std::max(sum2 / n - mean * mean, 0.0);
      os << ',' << mean << ',' << std::sqrt(var);
    }
    os << '\n';
  }
}

int write_polylines(const std::vector<std::string>& trace_files,
                    const std::string& path) {
  json episodes = json::array();
  for (const auto& file : trace_files) {
    std::ifstream is(file);
    if (!is) throw std::runtime_error("export: cannot read " + file);
    std::string line;
    json current;
    std::vector<std::vector<json>> polylines;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      json rec;
      try {
        rec = json::parse(line);
      } catch (const json::parse_error&) {
        throw std::runtime_error("export: malformed trace line in " + file);
      }
      const std::string type = rec.value("type", "");
      if (type == "episode_start") {
        current = {{"episode", rec.value("episode", 0)},
                   {"world", rec.value("world", "")},
                   {"epsilon", rec.value("epsilon", 0.0)},
                   {"target", rec.value("target", json::array())}};
        polylines.assign(rec.value("agents", 1), {});
      } else if (type == "step") {
        const auto& agents = rec.at("agents");
        for (size_t a = 0; a < agents.size() && a < polylines.size(); ++a)
          polylines[a].push_back(agents[a].at("p"));
      } else if (type == "episode_end") {
        current["success"] = rec.value("success", false);
        current["cause"] = rec.value("cause", "");
        current["steps"] = rec.value("t", 0);
        json lines = json::array();
        for (const auto& p : polylines) lines.push_back(p);
        current["polylines"] = lines;
        episodes.push_back(current);
        polylines.clear();
      }
    }
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("export: cannot write " + path);
  os << episodes.dump(1) << '\n';
  return static_cast<int>(episodes.size());
}

}  // namespace

ExportResult export_run(const std::vector<std::string>& inputs,
                        const std::string& out_dir) {
  if (inputs.empty()) throw std::invalid_argument("export: no inputs given");

  std::vector<std::string> metrics_files;
  std::vector<std::string> trace_files;
  for (const auto& input : inputs) {
    namespace fs = std::filesystem;
    if (!fs::exists(input))
      throw std::runtime_error("export: input not found: " + input);
    if (fs::is_directory(input)) {
      if (fs::exists(fs::path(input) / "metrics.csv"))
        metrics_files.push_back((fs::path(input) / "metrics.csv").string());
      std::vector<std::string> found;
      for (const auto& e : fs::directory_iterator(input))
        if (e.path().extension() == ".jsonl") found.push_back(e.path().string());
      std::sort(found.begin(), found.end());
      trace_files.insert(trace_files.end(), found.begin(), found.end());
    } else if (fs::path(input).extension() == ".jsonl") {
      trace_files.push_back(input);
    } else if (fs::path(input).extension() == ".csv") {
      metrics_files.push_back(input);
    } else {
      throw std::runtime_error("export: unsupported input: " + input);
    }
  }
  if (metrics_files.empty() && trace_files.empty())
    throw std::runtime_error("export: inputs contain no metrics.csv or .jsonl traces");

  std::filesystem::create_directories(out_dir);
  ExportResult result;
  if (!metrics_files.empty()) {
    std::vector<MetricsRun> runs;
    for (const auto& f : metrics_files) runs.push_back(read_metrics_csv(f));
    result.curves_path = out_dir + "/curves.csv";
    write_curves(runs, result.curves_path);
    result.num_runs = static_cast<int>(runs.size());
  }
  if (!trace_files.empty()) {
    result.polylines_path = out_dir + "/polylines.json";
    result.num_episodes = write_polylines(trace_files, result.polylines_path);
  }
  return result;
}

}  // namespace cts
