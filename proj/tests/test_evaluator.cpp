#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "doctest.h"
#include "footspot/errors.hpp"
#include "footspot/evaluator.hpp"
#include "footspot/rng.hpp"
#include "json.hpp"

using namespace footspot;

namespace {

// Definition-chasing reference: greedy confidence-ordered matching, 200
// thresholds, 11-point interpolated envelope. Kept structurally independent
// of the library implementation.
int oracle_tp(std::vector<std::pair<double, double>> preds,
              const std::vector<double>& gts, double delta_s) {
  std::stable_sort(preds.begin(), preds.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<bool> used(gts.size(), false);
  int tp = 0;
  for (const auto& [t, conf] : preds) {
    int pick = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || std::abs(gts[g] - t) > 0.5 * delta_s) continue;
      if (pick < 0) {
        pick = static_cast<int>(g);
        continue;
      }
      const double d_new = std::abs(gts[g] - t);
      const double d_old = std::abs(gts[static_cast<size_t>(pick)] - t);
      if (d_new < d_old ||
          (d_new == d_old && gts[g] < gts[static_cast<size_t>(pick)]))
        pick = static_cast<int>(g);
    }
    if (pick >= 0) {
      used[static_cast<size_t>(pick)] = true;
      ++tp;
    }
  }
  return tp;
}

double oracle_ap(const std::vector<std::vector<std::pair<double, double>>>& preds,
                 const std::vector<std::vector<double>>& gts, double delta_s) {
  size_t n_gt = 0;
  for (const auto& g : gts) n_gt += g.size();
  struct Point {
    double precision, recall;
    bool any;
  };
  std::vector<Point> points;
  for (int i = 1; i <= 200; ++i) {
    const double tau = static_cast<double>(i) / 200.0;
    int tp = 0, n_pass = 0;
    for (size_t m = 0; m < preds.size(); ++m) {
      std::vector<std::pair<double, double>> passing;
      for (const auto& p : preds[m])
        if (p.second >= tau) passing.push_back(p);
      n_pass += static_cast<int>(passing.size());
      tp += oracle_tp(passing, gts[m], delta_s);
    }
    points.push_back({n_pass > 0 ? static_cast<double>(tp) / n_pass : 1.0,
                      static_cast<double>(tp) / static_cast<double>(n_gt),
                      n_pass > 0});
  }
  double total = 0.0;
  for (int k = 0; k <= 10; ++k) {
    const double r = static_cast<double>(k) / 10.0;
    double best = 0.0;
    for (const Point& p : points)
      if (p.any && p.recall + 1e-12 >= r) best = std::max(best, p.precision);
    total += best;
  }
  return total / 11.0;
}

}  // namespace

TEST_CASE("match_tp hand cases") {
  SUBCASE("exact hit is a TP at any tolerance") {
    CHECK(match_tp({{30.0, 0.9}}, {30.0}, 5.0) == 1);
    CHECK(match_tp({{30.0, 0.9}}, {30.0}, 60.0) == 1);
  }
  SUBCASE("one GT matches at most one prediction") {
    CHECK(match_tp({{29.0, 0.9}, {31.0, 0.8}}, {30.0}, 10.0) == 1);
  }
  SUBCASE("window is a closed interval of half-width delta/2") {
    CHECK(match_tp({{32.5, 0.9}}, {30.0}, 5.0) == 1);   // exactly delta/2 away
    CHECK(match_tp({{32.6, 0.9}}, {30.0}, 5.0) == 0);   // just outside
  }
  SUBCASE("high-confidence prediction claims the contested GT") {
    // The 0.9 pred is farther but sorts first, so it takes the single GT.
    CHECK(match_tp({{33.0, 0.9}, {30.5, 0.2}}, {30.0}, 10.0) == 1);
  }
  SUBCASE("each prediction takes its nearest unmatched GT") {
    CHECK(match_tp({{10.0, 0.9}, {11.0, 0.8}}, {10.2, 11.1}, 10.0) == 2);
  }
  SUBCASE("no predictions or no GTs give zero") {
    CHECK(match_tp({}, {30.0}, 10.0) == 0);
    CHECK(match_tp({{30.0, 0.9}}, {}, 10.0) == 0);
  }
  SUBCASE("non-positive tolerance is rejected") {
    CHECK_THROWS_AS(match_tp({{1.0, 0.5}}, {1.0}, 0.0), ConfigError);
  }
}

TEST_CASE("pr_curve reproduces the two-prediction hand example") {
  // TP at conf 0.9, FP at conf 0.8, two GTs.
  const std::vector<std::vector<std::pair<double, double>>> preds = {
      {{10.0, 0.9}, {500.0, 0.8}}};
  const std::vector<std::vector<double>> gts = {{10.0, 100.0}};
  const auto curve = pr_curve(preds, gts, 10.0);
  REQUIRE(curve.size() == 200);

  const auto at = [&](double tau) -> const PrPoint& {
    for (const PrPoint& p : curve)
      if (p.threshold == doctest::Approx(tau)) return p;
    static PrPoint none;
    return none;
  };
  CHECK(at(0.85).precision == doctest::Approx(1.0));
  CHECK(at(0.85).recall == doctest::Approx(0.5));
  CHECK(at(0.5).precision == doctest::Approx(0.5));
  CHECK(at(0.5).recall == doctest::Approx(0.5));
  // Above every confidence nothing passes: precision 1 by convention.
  CHECK(at(0.95).any_prediction == false);
  CHECK(at(0.95).precision == doctest::Approx(1.0));
  CHECK(at(0.95).recall == doctest::Approx(0.0));
}

TEST_CASE("pr_curve without ground truth throws") {
  CHECK_THROWS_AS(pr_curve({{{1.0, 0.5}}}, {{}}, 10.0), NoGroundTruth);
}

TEST_CASE("ap_11pt hand cases") {
  SUBCASE("single matched prediction gives AP 1") {
    const auto curve = pr_curve({{{10.0, 0.7}}}, {{10.0}}, 10.0);
    CHECK(ap_11pt(curve) == doctest::Approx(1.0));
  }
  SUBCASE("one of two GTs matched at full precision gives 6/11") {
    const auto curve = pr_curve({{{10.0, 0.7}}}, {{10.0, 500.0}}, 10.0);
    CHECK(ap_11pt(curve) == doctest::Approx(6.0 / 11.0));
  }
  SUBCASE("no predictions score zero") {
    const auto curve = pr_curve({{}}, {{10.0}}, 10.0);
    CHECK(ap_11pt(curve) == doctest::Approx(0.0));
  }
}

TEST_CASE("evaluator equals the brute-force oracle on random instances") {
  Rng rng(2024);
  const std::vector<double> deltas = {5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60};
  for (int rep = 0; rep < 400; ++rep) {
    const int n_pred = static_cast<int>(rng.below(21));
    const int n_gt = 1 + static_cast<int>(rng.below(10));
    std::vector<std::vector<std::pair<double, double>>> preds(1);
    std::vector<std::vector<double>> gts(1);
    for (int i = 0; i < n_pred; ++i) {
      // Coarse grids provoke distance and confidence ties.
      const double t = static_cast<double>(rng.below(80)) * 2.5;
      const double conf = static_cast<double>(1 + rng.below(20)) / 20.0;
      preds[0].push_back({t, conf});
    }
    for (int i = 0; i < n_gt; ++i)
      gts[0].push_back(static_cast<double>(rng.below(80)) * 2.5);

    for (double delta : deltas) {
      const double got = ap_11pt(pr_curve(preds, gts, delta));
      const double want = oracle_ap(preds, gts, delta);
      REQUIRE(std::abs(got - want) < 1e-9);
    }
  }
}

TEST_CASE("AP is monotone non-decreasing in the tolerance") {
  Rng rng(555);
  for (int rep = 0; rep < 60; ++rep) {
    std::vector<std::vector<std::pair<double, double>>> preds(1);
    std::vector<std::vector<double>> gts(1);
    const int n_pred = 1 + static_cast<int>(rng.below(15));
    const int n_gt = 1 + static_cast<int>(rng.below(8));
    for (int i = 0; i < n_pred; ++i)
      preds[0].push_back({rng.uniform(0.0, 200.0), rng.uniform()});
    for (int i = 0; i < n_gt; ++i) gts[0].push_back(rng.uniform(0.0, 200.0));

    double prev = -1.0;
    for (double delta = 5.0; delta <= 60.0; delta += 5.0) {
      const double ap = ap_11pt(pr_curve(preds, gts, delta));
      CHECK(ap >= prev - 1e-12);
      prev = ap;
    }
  }
}

TEST_CASE("perfect predictions give mAP 1 over represented classes") {
  EvalInput in;
  for (int c = 0; c < 5; ++c) {
    in.ground_truth.push_back({static_cast<EventClass>(c), 60.0 * (c + 1), 1.0});
    in.predictions.push_back({static_cast<EventClass>(c), 60.0 * (c + 1), 1.0});
  }
  const EvalReport report = evaluate({in});
  CHECK(report.map == doctest::Approx(1.0));
  CHECK(report.n_classes_evaluated == 5);
  for (double v : report.map_by_delta) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("empty predictions give zero AP everywhere") {
  EvalInput in;
  in.ground_truth.push_back({static_cast<EventClass>(2), 30.0, 1.0});
  const EvalReport report = evaluate({in});
  CHECK(report.map == doctest::Approx(0.0));
  CHECK(report.n_classes_evaluated == 1);
}

TEST_CASE("prediction order does not change the report") {
  Rng rng(31);
  EvalInput a;
  for (int i = 0; i < 12; ++i) {
    a.ground_truth.push_back(
        {static_cast<EventClass>(i % 3), rng.uniform(10.0, 500.0), 1.0});
    a.predictions.push_back(
        {static_cast<EventClass>(i % 3), rng.uniform(10.0, 500.0), rng.uniform()});
  }
  EvalInput b = a;
  std::reverse(b.predictions.begin(), b.predictions.end());
  const EvalReport ra = evaluate({a});
  const EvalReport rb = evaluate({b});
  CHECK(ra.map == doctest::Approx(rb.map).epsilon(1e-12));
  for (size_t c = 0; c < ra.classes.size(); ++c)
    CHECK(ra.classes[c].ap == doctest::Approx(rb.classes[c].ap).epsilon(1e-12));
}

TEST_CASE("step AP across tolerances matches the trapezoid by hand") {
  // Single GT at 0 s, single pred at 10 s: TP exactly when delta >= 20.
  EvalInput in;
  in.ground_truth.push_back({static_cast<EventClass>(0), 0.0, 1.0});
  in.predictions.push_back({static_cast<EventClass>(0), 10.0, 0.9});
  const EvalReport report = evaluate({in});
  const ClassEval& ce = report.classes[0];
  for (size_t d = 0; d < report.deltas_s.size(); ++d)
    CHECK(ce.ap_by_delta[d] == doctest::Approx(report.deltas_s[d] >= 20.0 ? 1.0 : 0.0));
  // Trapezoid: half-step at [15,20], full rectangles from 20 to 60.
  CHECK(ce.ap == doctest::Approx((0.5 * 5.0 + 40.0) / 55.0));
}

TEST_CASE("zero-GT classes are excluded unless configured in") {
  EvalInput in;
  in.ground_truth.push_back({static_cast<EventClass>(1), 30.0, 1.0});
  in.predictions.push_back({static_cast<EventClass>(1), 30.0, 0.8});
  // A stray prediction for a class with no GT at all.
  in.predictions.push_back({static_cast<EventClass>(7), 99.0, 0.9});

  const EvalReport excl = evaluate({in});
  CHECK(excl.n_classes_evaluated == 1);
  CHECK(excl.map == doctest::Approx(1.0));

  EvalConfig cfg;
  cfg.include_zero_gt = true;
  const EvalReport incl = evaluate({in}, cfg);
  CHECK(incl.n_classes_evaluated == 12);
  CHECK(incl.map == doctest::Approx(1.0 / 12.0));
}

TEST_CASE("evaluate rejects bad inputs") {
  EvalInput no_gt;
  no_gt.predictions.push_back({static_cast<EventClass>(0), 5.0, 0.5});
  CHECK_THROWS_AS(evaluate({no_gt}), NoGroundTruth);

  EvalInput ok;
  ok.ground_truth.push_back({static_cast<EventClass>(0), 5.0, 1.0});
  EvalConfig bad;
  bad.deltas_s = {};
  CHECK_THROWS_AS(evaluate({ok}, bad), ConfigError);
  bad.deltas_s = {10.0, 10.0};
  CHECK_THROWS_AS(evaluate({ok}, bad), ConfigError);
  bad.deltas_s = {10.0, 5.0};
  CHECK_THROWS_AS(evaluate({ok}, bad), ConfigError);
}

TEST_CASE("report serializations carry the headline numbers") {
  EvalInput in;
  in.ground_truth.push_back({static_cast<EventClass>(3), 45.0, 1.0});
  in.predictions.push_back({static_cast<EventClass>(3), 44.0, 0.7});
  const EvalReport report = evaluate({in});

  const nlohmann::json j = nlohmann::json::parse(report_to_json(report));
  CHECK(j.at("map").get<double>() == doctest::Approx(report.map));
  CHECK(j.at("deltas_s").size() == 12);
  CHECK(j.at("classes").size() == 12);
  CHECK(j.at("n_classes_evaluated").get<int>() == 1);

  const std::string text = report_to_text(report);
  CHECK(text.find("mAP") != std::string::npos);
  CHECK(text.find(event_class_name(static_cast<EventClass>(3))) != std::string::npos);
}
