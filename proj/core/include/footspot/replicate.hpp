#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "footspot/data_model.hpp"
#include "footspot/synthetic.hpp"

namespace footspot {

// End-to-end comparison across pooling methods (8 rows at the headline
// window) and window sizes (NetVLAD++ at T = 5..60 s), all on one shared
// synthetic dataset.
struct ReplicateConfig {
  uint64_t seed = 7;
  GeneratorConfig generator;  // duration/fps/events per match
  int n_train = 5, n_val = 2, n_test = 2;
  double fps = 2.0;            // working rate for training and inference
  double headline_window_s = 10.0;
  int clusters = 64;
  double nms_window_s = 30.0;
  int pooling_max_epochs = 40;
  int window_max_epochs = 16;  // smaller budget for the window sweep rows
  std::vector<double> window_sweep_s = {5,  10, 15, 20, 25, 30,
                                        35, 40, 45, 50, 55, 60};
  std::filesystem::path out_dir = "replicate_out";
};

struct ReplicateRow {
  std::string section;  // "pooling" or "window"
  std::string label;    // table row name, e.g. "NetVLAD++" or "T=15s"
  std::string method;
  double window_s = 0.0;
  double map = 0.0;
  std::array<double, kNumEventClasses> ap_per_class{};
  int epochs_run = 0;
  double train_seconds = 0.0;
  bool reused = false;  // window row sharing the headline pooling row's run
};

struct ReplicateResult {
  std::vector<ReplicateRow> rows;
  double headline_map = 0.0;  // NetVLAD++ at the headline window
  std::vector<std::filesystem::path> artifacts;  // every file written
};

// Runs generate -> train -> spot -> eval -> plot for every row and writes
// results.json, table.txt, the headline checkpoint/history and two SVG plots
// under cfg.out_dir. Deterministic given cfg.
ReplicateResult run_replicate(const ReplicateConfig& cfg, std::ostream* log = nullptr);

// The comparison table as fixed-width text (mAP values scaled to 0..100).
std::string replicate_table(const ReplicateResult& result);

}  // namespace footspot
