#include <string>
#include <vector>

#include "doctest.h"
#include "footspot/errors.hpp"
#include "footspot/plotting.hpp"
#include "footspot/rng.hpp"

using namespace footspot;

namespace {

EvalInput sample_input() {
  EvalInput in;
  in.ground_truth.push_back({static_cast<EventClass>(0), 60.0, 1.0});
  in.ground_truth.push_back({static_cast<EventClass>(0), 180.0, 1.0});
  in.ground_truth.push_back({static_cast<EventClass>(4), 120.0, 1.0});
  in.predictions.push_back({static_cast<EventClass>(0), 61.0, 0.9});
  in.predictions.push_back({static_cast<EventClass>(0), 300.0, 0.4});
  in.predictions.push_back({static_cast<EventClass>(4), 118.0, 0.7});
  return in;
}

ConfidenceCurve sample_curve() {
  ConfidenceCurve curve;
  curve.match_id = "plot";
  curve.fps = 2.0;
  Rng rng(9);
  for (int t = 0; t < 120; ++t) {
    curve.time_s.push_back(0.5 * t);
    std::array<double, kNumEventClasses> row{};
    for (double& v : row) v = rng.uniform(0.0, 0.2);
    curve.scores.push_back(row);
  }
  curve.scores[40][2] = 0.95;
  curve.scores[44][2] = 0.85;
  return curve;
}

}  // namespace

TEST_CASE("pr grid renders a well-formed deterministic svg") {
  const EvalConfig cfg;
  const std::string svg1 = plot_pr_grid({sample_input()}, cfg, 30.0);
  const std::string svg2 = plot_pr_grid({sample_input()}, cfg, 30.0);
  CHECK(svg1 == svg2);
  CHECK(svg1.rfind("<svg", 0) == 0);
  CHECK(svg1.find("</svg>") != std::string::npos);
  // One panel per class, including the empty ones.
  for (int c = 0; c < 12; ++c)
    CHECK(svg1.find(event_class_name(static_cast<EventClass>(c))) != std::string::npos);
  CHECK(svg1.find("AP") != std::string::npos);
}

TEST_CASE("pr grid rejects a tolerance outside the sweep") {
  CHECK_THROWS_AS(plot_pr_grid({sample_input()}, EvalConfig{}, 31.0), MissingDelta);
}

TEST_CASE("classes without ground truth render as empty panels") {
  EvalInput sparse;
  sparse.ground_truth.push_back({static_cast<EventClass>(1), 5.0, 1.0});
  const std::string svg = plot_pr_grid({sparse}, EvalConfig{}, 30.0);
  // 11 of 12 classes have no ground truth here.
  size_t empties = 0, at = 0;
  while ((at = svg.find("(no ground truth)", at)) != std::string::npos) {
    ++empties;
    ++at;
  }
  CHECK(empties == 11);
}

TEST_CASE("confidence traces render all three panels deterministically") {
  const ConfidenceCurve curve = sample_curve();
  std::vector<SpottedEvent> gt = {{static_cast<EventClass>(2), 20.0, 1.0}};
  const std::string svg1 = plot_confidence_traces(curve, gt, 30.0, 0.5);
  const std::string svg2 = plot_confidence_traces(curve, gt, 30.0, 0.5);
  CHECK(svg1 == svg2);
  CHECK(svg1.rfind("<svg", 0) == 0);
  CHECK(svg1.find("</svg>") != std::string::npos);
  for (int c = 0; c < 12; ++c)
    CHECK(svg1.find(event_class_name(static_cast<EventClass>(c))) != std::string::npos);
}

TEST_CASE("threshold changes the rendered survivors") {
  const ConfidenceCurve curve = sample_curve();
  const std::string low = plot_confidence_traces(curve, {}, 30.0, 0.1);
  const std::string high = plot_confidence_traces(curve, {}, 30.0, 0.99);
  CHECK(low != high);
}

TEST_CASE("empty ground truth renders a trace without markers") {
  const ConfidenceCurve curve = sample_curve();
  std::vector<SpottedEvent> gt = {{static_cast<EventClass>(2), 20.0, 1.0}};
  const std::string with_gt = plot_confidence_traces(curve, gt, 30.0, 0.5);
  const std::string without = plot_confidence_traces(curve, {}, 30.0, 0.5);
  CHECK(with_gt != without);
  CHECK(without.rfind("<svg", 0) == 0);
  CHECK(without.find("</svg>") != std::string::npos);
}
