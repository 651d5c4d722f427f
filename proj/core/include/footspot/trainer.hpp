#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <vector>

#include "footspot/data_model.hpp"
#include "footspot/model.hpp"

namespace footspot {

struct TrainConfig {
  ModelConfig model;
  double stride_s = 10.0;  // training-grid stride; equal to window_s by default
  double lr0 = 1e-3;
  double plateau_factor = 0.1;
  int plateau_patience = 10;
  double lr_stop = 1e-8;   // stop once the schedule drops the lr below this
  int batch_size = 32;
  int max_epochs = 200;    // safety net; the plateau schedule usually stops first
  uint64_t seed = 7;
  bool class_weighting = false;  // scale positive terms by the neg/pos ratio
};

struct EpochStats {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // value in effect for the next epoch
};

struct TrainResult {
  SpottingModel model;  // parameters from the best-validation epoch
  std::vector<EpochStats> history;
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
};

// Full training loop: resample matches to the working rate, cut the training
// grid, then run Adam with reduce-on-plateau until the lr floor or max_epochs.
// The returned model is the snapshot with the lowest validation loss.
// Throws EmptyDataset when either split yields no chunks.
TrainResult fit(const std::vector<TrackedMatch>& train_matches,
                const std::vector<TrackedMatch>& val_matches, const TrainConfig& cfg,
                std::ostream* log = nullptr);

// "epoch,train_loss,val_loss,lr" CSV, one row per epoch.
void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& path);

}  // namespace footspot
