#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "footspot/data_model.hpp"
#include "footspot/model.hpp"

namespace footspot {

// Per-class confidences on the resampled frame grid of one match.
struct ConfidenceCurve {
  std::string match_id;
  double fps = 0.0;
  std::vector<double> time_s;
  std::vector<std::array<double, kNumEventClasses>> scores;  // one row per frame
};

struct SpottedEvent {
  EventClass class_id;
  double time_s = 0.0;
  double confidence = 0.0;
};

// Slides the model across the whole match (one window per sampled frame,
// clamp-padded at the edges) and returns the confidence of every class at
// every timestamp. Each frame is encoded once and its embedding reused by
// all windows covering it, so this is linear in match length. Confidences
// are clamped to [1e-9, 1 - 1e-9] so a threshold of exactly 1 keeps nothing.
ConfidenceCurve score_match(SpottingModel& model, const TrackedMatch& match);

// 1-D non-maximum suppression on (time, confidence) points: repeatedly keep
// the highest-confidence point (ties: earliest time) and drop every other
// point strictly within window_s of it. Survivors come back time-ascending,
// pairwise at least window_s apart.
std::vector<std::pair<double, double>> nms_1d(
    const std::vector<std::pair<double, double>>& points, double window_s);

// Per-class NMS over a curve, then a confidence floor. min_confidence = 0
// keeps every NMS survivor, which is what the evaluator sweep wants.
std::vector<SpottedEvent> spot_curve(const ConfidenceCurve& curve, double nms_window_s,
                                     double min_confidence);

// score_match + spot_curve in one call.
std::vector<SpottedEvent> spot(SpottingModel& model, const TrackedMatch& match,
                               double nms_window_s, double min_confidence);

// "time_s,out,...,shot" with one column per class in reporting order.
void write_curve_csv(const ConfidenceCurve& curve, const std::filesystem::path& path);
ConfidenceCurve read_curve_csv(const std::filesystem::path& path);

// "class,time_s,confidence", rows sorted by class then time.
void write_predictions_csv(const std::vector<SpottedEvent>& events,
                           const std::filesystem::path& path);
std::vector<SpottedEvent> read_predictions_csv(const std::filesystem::path& path);

}  // namespace footspot
