#include "footspot/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "footspot/errors.hpp"
#include "json.hpp"

namespace footspot {
namespace {

constexpr int kThresholdSteps = 200;  // thresholds i / 200, i = 1..200

// Trapezoid average of y over x (uniform or not); a single point is its own
// average.
double trapezoid_mean(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() == 1) return y[0];
  double area = 0.0;
  for (size_t i = 1; i < x.size(); ++i)
    area += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return area / (x.back() - x.front());
}

}  // namespace

int match_tp(const std::vector<std::pair<double, double>>& predictions,
             const std::vector<double>& gt_times_s, double delta_s) {
  if (delta_s <= 0.0) throw ConfigError("tolerance must be positive");

  std::vector<size_t> order(predictions.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (predictions[a].second != predictions[b].second)
      return predictions[a].second > predictions[b].second;
    return predictions[a].first < predictions[b].first;
  });

  const double radius = 0.5 * delta_s;
  std::vector<char> used(gt_times_s.size(), 0);
  int tp = 0;
  for (size_t idx : order) {
    const double t = predictions[idx].first;
    int best = -1;
    double best_dist = 0.0;
    for (size_t g = 0; g < gt_times_s.size(); ++g) {
      if (used[g]) continue;
      const double dist = std::abs(gt_times_s[g] - t);
      if (dist > radius) continue;
      if (best < 0 || dist < best_dist ||
          (dist == best_dist && gt_times_s[g] < gt_times_s[static_cast<size_t>(best)])) {
        best = static_cast<int>(g);
        best_dist = dist;
      }
    }
    if (best >= 0) {
      used[static_cast<size_t>(best)] = 1;
      ++tp;
    }
  }
  return tp;
}

std::vector<PrPoint> pr_curve(
    const std::vector<std::vector<std::pair<double, double>>>& predictions_by_match,
    const std::vector<std::vector<double>>& gt_by_match, double delta_s) {
  if (predictions_by_match.size() != gt_by_match.size())
    throw ConfigError("prediction and ground-truth match counts differ");

  int64_t n_gt = 0;
  for (const auto& g : gt_by_match) n_gt += static_cast<int64_t>(g.size());
  if (n_gt == 0) throw NoGroundTruth("no ground-truth events for this class");

  std::vector<PrPoint> curve;
  curve.reserve(kThresholdSteps);
  std::vector<std::pair<double, double>> passing;
  for (int i = 1; i <= kThresholdSteps; ++i) {
    const double threshold = static_cast<double>(i) / kThresholdSteps;
    int tp = 0, n_pred = 0;
    for (size_t m = 0; m < predictions_by_match.size(); ++m) {
      passing.clear();
      for (const auto& p : predictions_by_match[m])
        if (p.second >= threshold) passing.push_back(p);
      n_pred += static_cast<int>(passing.size());
      tp += match_tp(passing, gt_by_match[m], delta_s);
    }

    PrPoint point;
    point.threshold = threshold;
    point.tp = tp;
    point.fp = n_pred - tp;
    point.any_prediction = n_pred > 0;
    point.precision = n_pred > 0 ? static_cast<double>(tp) / n_pred : 1.0;
    point.recall = static_cast<double>(tp) / static_cast<double>(n_gt);
    curve.push_back(point);
  }
  return curve;
}

double ap_11pt(const std::vector<PrPoint>& curve) {
  double total = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double r = static_cast<double>(k) / 10.0;
    double best = 0.0;
    for (const PrPoint& p : curve)
      if (p.any_prediction && p.recall + 1e-12 >= r) best = std::max(best, p.precision);
    total += best;
  }
  return total / 11.0;
}

std::vector<SpottedEvent> ground_truth_events(const TrackedMatch& match) {
  if (match.fps <= 0.0) throw BadRate("match has no positive fps");
  std::vector<SpottedEvent> events;
  events.reserve(match.events.size());
  for (const EventAnnotation& e : match.events)
    events.push_back({e.class_id, static_cast<double>(e.frame_index) / match.fps, 1.0});
  return events;
}

EvalReport evaluate(const std::vector<EvalInput>& inputs, const EvalConfig& cfg) {
  if (cfg.deltas_s.empty()) throw ConfigError("tolerance list is empty");
  for (size_t i = 0; i < cfg.deltas_s.size(); ++i) {
    if (cfg.deltas_s[i] <= 0.0) throw ConfigError("tolerances must be positive");
    if (i > 0 && cfg.deltas_s[i] <= cfg.deltas_s[i - 1])
      throw ConfigError("tolerances must be strictly increasing");
  }

  EvalReport report;
  report.deltas_s = cfg.deltas_s;
  report.map_by_delta.assign(cfg.deltas_s.size(), 0.0);

  int64_t total_gt = 0;
  for (const EvalInput& in : inputs) total_gt += static_cast<int64_t>(in.ground_truth.size());
  if (total_gt == 0) throw NoGroundTruth("no ground-truth events in any match");

  for (int c = 0; c < kNumEventClasses; ++c) {
    std::vector<std::vector<std::pair<double, double>>> preds(inputs.size());
    std::vector<std::vector<double>> gts(inputs.size());
    int n_gt = 0;
    for (size_t m = 0; m < inputs.size(); ++m) {
      for (const SpottedEvent& p : inputs[m].predictions)
        if (p.class_id == static_cast<EventClass>(c))
          preds[m].push_back({p.time_s, p.confidence});
      for (const SpottedEvent& g : inputs[m].ground_truth)
        if (g.class_id == static_cast<EventClass>(c)) gts[m].push_back(g.time_s);
      n_gt += static_cast<int>(gts[m].size());
    }

    ClassEval ce;
    ce.class_id = static_cast<EventClass>(c);
    ce.n_gt = n_gt;
    ce.ap_by_delta.assign(cfg.deltas_s.size(), 0.0);
    if (n_gt > 0) {
      for (size_t d = 0; d < cfg.deltas_s.size(); ++d)
        ce.ap_by_delta[d] = ap_11pt(pr_curve(preds, gts, cfg.deltas_s[d]));
      ce.ap = trapezoid_mean(cfg.deltas_s, ce.ap_by_delta);
    }
    report.classes.push_back(std::move(ce));
  }

  for (const ClassEval& ce : report.classes) {
    if (ce.n_gt == 0 && !cfg.include_zero_gt) continue;
    ++report.n_classes_evaluated;
    report.map += ce.ap;
    for (size_t d = 0; d < report.map_by_delta.size(); ++d)
      report.map_by_delta[d] += ce.ap_by_delta[d];
  }
  if (report.n_classes_evaluated > 0) {
    report.map /= report.n_classes_evaluated;
    for (double& v : report.map_by_delta) v /= report.n_classes_evaluated;
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["map"] = report.map;
  j["n_classes_evaluated"] = report.n_classes_evaluated;
  j["deltas_s"] = report.deltas_s;
  j["map_by_delta"] = report.map_by_delta;
  j["classes"] = nlohmann::ordered_json::array();
  for (const ClassEval& ce : report.classes) {
    nlohmann::ordered_json jc;
    jc["class"] = std::string(event_class_name(ce.class_id));
    jc["n_gt"] = ce.n_gt;
    jc["ap"] = ce.ap;
    jc["ap_by_delta"] = ce.ap_by_delta;
    j["classes"].push_back(std::move(jc));
  }
  return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& report) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << "class          n_gt      AP\n";
  for (const ClassEval& ce : report.classes) {
    const std::string name(event_class_name(ce.class_id));
    out << name << std::string(name.size() < 15 ? 15 - name.size() : 1, ' ');
    std::string n = std::to_string(ce.n_gt);
    out << std::string(n.size() < 4 ? 4 - n.size() : 0, ' ') << n << "  ";
    if (ce.n_gt == 0)
      out << "     -\n";
    else
      out << ce.ap << "\n";
  }
  out << "mAP (" << report.n_classes_evaluated << " classes, tolerances "
      << report.deltas_s.front() << "-" << report.deltas_s.back()
      << " s): " << report.map << "\n";
  return out.str();
}

}  // namespace footspot
