#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "footspot/data_model.hpp"
#include "footspot/errors.hpp"
#include "footspot/rng.hpp"
#include "footspot/synthetic.hpp"
#include "footspot/trainer.hpp"

using namespace footspot;

namespace {

constexpr double kChanceLoss = 12.0 * 0.6931471805599453;

TrackedMatch quick_match(uint64_t seed, double duration_s, int events_per_class) {
  GeneratorConfig cfg;
  cfg.seed = seed;
  cfg.duration_s = duration_s;
  for (auto& n : cfg.events_per_class) n = events_per_class;
  return generate_match(cfg);
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("footspot_trainer_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("train loss drops strictly below chance within 20 epochs") {
  const std::vector<TrackedMatch> train = {quick_match(31, 450.0, 1),
                                           quick_match(32, 450.0, 1)};
  const std::vector<TrackedMatch> val = {quick_match(33, 450.0, 1)};

  TrainConfig cfg;
  cfg.model.method = "avg";
  cfg.stride_s = 10.0;
  cfg.batch_size = 8;
  cfg.max_epochs = 20;
  const TrainResult result = fit(train, val, cfg);

  REQUIRE(!result.history.empty());
  double best_train = result.history.front().train_loss;
  for (const EpochStats& row : result.history) best_train = std::min(best_train, row.train_loss);
  CHECK(best_train < kChanceLoss);
}

TEST_CASE("random labels cannot be validated below chance") {
  // Labels drawn independently of the tracks: training may inch ahead by
  // memorizing, but validation stays pinned near the 12*ln2 chance floor.
  TrackedMatch train_m = quick_match(41, 450.0, 0);
  TrackedMatch val_m = quick_match(42, 450.0, 0);
  Rng rng(5);
  for (TrackedMatch* m : {&train_m, &val_m}) {
    const int64_t n = static_cast<int64_t>(m->frames.size());
    for (int64_t start = 0; start + 20 <= n; start += 20)
      for (int c = 0; c < 12; ++c)
        if (rng.uniform() < 0.5)
          m->events.push_back({static_cast<EventClass>(c), start + 10});
  }

  TrainConfig cfg;
  cfg.model.method = "avg";
  cfg.stride_s = 10.0;
  cfg.batch_size = 8;
  cfg.max_epochs = 10;
  const TrainResult result = fit({train_m}, {val_m}, cfg);

  REQUIRE(!result.history.empty());
  CHECK(result.history.back().train_loss > 0.75 * kChanceLoss);
  CHECK(result.best_val_loss > 0.90 * kChanceLoss);
}

TEST_CASE("fit is deterministic under a fixed seed") {
  const std::vector<TrackedMatch> train = {quick_match(51, 300.0, 0)};
  const std::vector<TrackedMatch> val = {quick_match(52, 300.0, 0)};

  TrainConfig cfg;
  cfg.model.method = "netvlad++";
  cfg.model.clusters = 8;
  cfg.batch_size = 8;
  cfg.max_epochs = 3;
  cfg.seed = 77;

  TempDir tmp;
  const TrainResult a = fit(train, val, cfg);
  const TrainResult b = fit(train, val, cfg);
  a.model.save(tmp.path / "a.ckpt");
  b.model.save(tmp.path / "b.ckpt");

  std::ifstream fa(tmp.path / "a.ckpt", std::ios::binary);
  std::ifstream fb(tmp.path / "b.ckpt", std::ios::binary);
  std::ostringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
    CHECK(a.history[i].val_loss == b.history[i].val_loss);
  }
}

TEST_CASE("different seeds shuffle into different histories") {
  const std::vector<TrackedMatch> train = {quick_match(61, 300.0, 1)};
  const std::vector<TrackedMatch> val = {quick_match(62, 300.0, 1)};

  TrainConfig cfg;
  cfg.model.method = "avg";
  cfg.batch_size = 4;
  cfg.max_epochs = 2;
  cfg.seed = 1;
  const TrainResult a = fit(train, val, cfg);
  cfg.seed = 2;
  const TrainResult b = fit(train, val, cfg);
  CHECK(a.history.front().train_loss != b.history.front().train_loss);
}

TEST_CASE("best epoch bookkeeping matches the history") {
  const std::vector<TrackedMatch> train = {quick_match(71, 300.0, 1)};
  const std::vector<TrackedMatch> val = {quick_match(72, 300.0, 1)};

  TrainConfig cfg;
  cfg.model.method = "avg";
  cfg.max_epochs = 6;
  const TrainResult result = fit(train, val, cfg);

  REQUIRE(result.best_epoch >= 1);
  REQUIRE(result.best_epoch <= static_cast<int>(result.history.size()));
  const EpochStats& best = result.history[static_cast<size_t>(result.best_epoch - 1)];
  CHECK(best.val_loss == doctest::Approx(result.best_val_loss));
  for (const EpochStats& row : result.history)
    CHECK(row.val_loss >= result.best_val_loss);
}

TEST_CASE("empty splits raise EmptyDataset") {
  const std::vector<TrackedMatch> ok = {quick_match(81, 300.0, 0)};
  const std::vector<TrackedMatch> none;
  // 5 s of track is shorter than one 10 s window: no chunks either.
  const std::vector<TrackedMatch> too_short = {quick_match(82, 5.0, 0)};

  TrainConfig cfg;
  cfg.model.method = "avg";
  cfg.max_epochs = 1;
  CHECK_THROWS_AS(fit(none, ok, cfg), EmptyDataset);
  CHECK_THROWS_AS(fit(ok, none, cfg), EmptyDataset);
  CHECK_THROWS_AS(fit(too_short, ok, cfg), EmptyDataset);
}

TEST_CASE("class weighting produces finite losses") {
  const std::vector<TrackedMatch> train = {quick_match(91, 300.0, 1)};
  const std::vector<TrackedMatch> val = {quick_match(92, 300.0, 1)};

  TrainConfig cfg;
  cfg.model.method = "avg";
  cfg.max_epochs = 2;
  cfg.class_weighting = true;
  const TrainResult result = fit(train, val, cfg);
  for (const EpochStats& row : result.history) {
    CHECK(std::isfinite(row.train_loss));
    CHECK(std::isfinite(row.val_loss));
  }
}

TEST_CASE("history CSV round-trips through the expected format") {
  TempDir tmp;
  const std::vector<EpochStats> history = {{1, 8.0, 8.5, 1e-3}, {2, 6.25, 7.0, 1e-3}};
  const auto path = tmp.path / "history.csv";
  write_history_csv(history, path);

  std::ifstream in(path);
  std::string line;
  REQUIRE(static_cast<bool>(std::getline(in, line)));
  CHECK(line == "epoch,train_loss,val_loss,lr");
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++rows;
    std::istringstream ss(line);
    std::string field;
    std::getline(ss, field, ',');
    CHECK(std::stoi(field) == rows);
    std::getline(ss, field, ',');
    CHECK(std::stod(field) == doctest::Approx(history[static_cast<size_t>(rows - 1)].train_loss));
  }
  CHECK(rows == 2);
}
