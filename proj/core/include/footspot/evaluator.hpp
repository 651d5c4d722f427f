#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "footspot/data_model.hpp"
#include "footspot/spotter.hpp"

namespace footspot {

// Greedy temporal matching for one class in one match: predictions in
// confidence order (ties: earlier first) each claim the closest unmatched
// ground-truth instant within delta_s/2 (inclusive; ties toward the earlier
// instant). Returns the number of matched predictions.
int match_tp(const std::vector<std::pair<double, double>>& predictions,
             const std::vector<double>& gt_times_s, double delta_s);

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;  // reported as 1 when nothing passes the threshold
  double recall = 0.0;
  int tp = 0, fp = 0;
  bool any_prediction = false;
};

// Precision/recall at thresholds i/200 for i = 1..200, pooled over matches.
// Element i of each outer vector belongs to match i. Throws NoGroundTruth
// when no match has a ground-truth instant.
std::vector<PrPoint> pr_curve(
    const std::vector<std::vector<std::pair<double, double>>>& predictions_by_match,
    const std::vector<std::vector<double>>& gt_by_match, double delta_s);

// 11-point interpolated average precision. Thresholds where nothing passed
// carry no evidence and are skipped, so an empty prediction set scores 0.
double ap_11pt(const std::vector<PrPoint>& curve);

struct ClassEval {
  EventClass class_id;
  int n_gt = 0;
  std::vector<double> ap_by_delta;
  double ap = 0.0;  // trapezoid average of ap_by_delta over the tolerances
};

struct EvalReport {
  std::vector<double> deltas_s;
  std::vector<ClassEval> classes;      // all classes, in reporting order
  std::vector<double> map_by_delta;    // averaged over evaluated classes
  double map = 0.0;
  int n_classes_evaluated = 0;
};

struct EvalConfig {
  std::vector<double> deltas_s = {5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60};
  bool include_zero_gt = false;  // when true, classes without ground truth score 0
};

// One entry per match: spotted predictions plus ground-truth events
// (confidence ignored on the ground-truth side).
struct EvalInput {
  std::vector<SpottedEvent> predictions;
  std::vector<SpottedEvent> ground_truth;
};

// Tolerance-swept evaluation over a set of matches. Throws NoGroundTruth
// when no class has any ground truth, ConfigError on an empty or
// non-increasing tolerance list.
EvalReport evaluate(const std::vector<EvalInput>& inputs, const EvalConfig& cfg = {});

// Ground-truth events of a match as (class, seconds) pairs.
std::vector<SpottedEvent> ground_truth_events(const TrackedMatch& match);

std::string report_to_json(const EvalReport& report);
std::string report_to_text(const EvalReport& report);

}  // namespace footspot
