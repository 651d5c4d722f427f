#pragma once

#include <string>
#include <vector>

#include "footspot/evaluator.hpp"
#include "footspot/spotter.hpp"

namespace footspot {

// One precision/recall panel per class at a single matching tolerance,
// arranged on a fixed grid with the AP in each panel title; classes without
// ground truth render as empty panels. The output is a self-contained SVG
// string that depends only on the inputs. Throws MissingDelta when delta_s
// is not one of cfg.deltas_s.
std::string plot_pr_grid(const std::vector<EvalInput>& inputs, const EvalConfig& cfg,
                         double delta_s);

// One row per class, three columns: the raw confidence trace, the NMS
// survivors, and the survivors at or above the confidence threshold, each
// with dashed markers at ground-truth instants. Deterministic SVG as above.
std::string plot_confidence_traces(const ConfidenceCurve& curve,
                                   const std::vector<SpottedEvent>& ground_truth,
                                   double nms_window_s, double confidence_threshold);

}  // namespace footspot
