#pragma once

#include <string>
#include <vector>

namespace cts {

struct ExportResult {
  std::string curves_path;     // empty when no metrics files were found
  std::string polylines_path;  // empty when no traces were found
  int num_runs = 0;
  int num_episodes = 0;
};

// Turns run outputs into plot-ready files: learning-curve CSV with
// mean/std across runs (inputs: run directories holding metrics.csv, or
// the CSV files themselves) and per-episode 3-D trajectory polylines
// (inputs: .jsonl trace files). Throws on empty or malformed input.
ExportResult export_run(const std::vector<std::string>& inputs,
                        const std::string& out_dir);

}  // namespace cts
