#include "footspot/plotting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "footspot/errors.hpp"

namespace footspot {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

// Axis-aligned plotting area mapping unit coordinates to pixels.
struct Panel {
  double x0 = 0.0, y0 = 0.0, w = 0.0, h = 0.0;

  double px(double u) const { return x0 + u * w; }
  double py(double v) const { return y0 + (1.0 - v) * h; }
};

void open_svg(std::ostringstream& out, double width, double height) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width) << ' '
      << fmt(height) << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

void panel_frame(std::ostringstream& out, const Panel& p, const std::string& title,
                 bool gridlines) {
  out << "<rect x=\"" << fmt(p.x0) << "\" y=\"" << fmt(p.y0) << "\" width=\""
      << fmt(p.w) << "\" height=\"" << fmt(p.h)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  if (!title.empty())
    out << "<text x=\"" << fmt(p.x0 + p.w / 2) << "\" y=\"" << fmt(p.y0 - 5)
        << "\" text-anchor=\"middle\">" << title << "</text>\n";
  if (gridlines)
    for (double g = 0.25; g < 1.0; g += 0.25) {
      out << "<line x1=\"" << fmt(p.px(g)) << "\" y1=\"" << fmt(p.py(0)) << "\" x2=\""
          << fmt(p.px(g)) << "\" y2=\"" << fmt(p.py(1))
          << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
      out << "<line x1=\"" << fmt(p.px(0)) << "\" y1=\"" << fmt(p.py(g)) << "\" x2=\""
          << fmt(p.px(1)) << "\" y2=\"" << fmt(p.py(g))
          << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
    }
}

void polyline(std::ostringstream& out, const std::vector<std::pair<double, double>>& pts,
              const char* color, double width) {
  if (pts.empty()) return;
  out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
      << fmt(width) << "\" points=\"";
  for (size_t i = 0; i < pts.size(); ++i) {
    if (i) out << ' ';
    out << fmt(pts[i].first) << ',' << fmt(pts[i].second);
  }
  out << "\"/>\n";
}

void gt_markers(std::ostringstream& out, const Panel& p,
                const std::vector<SpottedEvent>& ground_truth, EventClass cls,
                double t_max) {
  for (const SpottedEvent& g : ground_truth) {
    if (g.class_id != cls) continue;
    const double x = p.px(g.time_s / t_max);
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(p.py(0)) << "\" x2=\""
        << fmt(x) << "\" y2=\"" << fmt(p.py(1))
        << "\" stroke=\"#d62728\" stroke-dasharray=\"3,2\"/>\n";
  }
}

void stems(std::ostringstream& out, const Panel& p,
           const std::vector<std::pair<double, double>>& events, double t_max) {
  for (const auto& [t, conf] : events) {
    const double x = p.px(t / t_max);
    out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(p.py(0)) << "\" x2=\""
        << fmt(x) << "\" y2=\"" << fmt(p.py(conf))
        << "\" stroke=\"#2ca02c\" stroke-width=\"1.5\"/>\n"
        << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(p.py(conf))
        << "\" r=\"2.2\" fill=\"#2ca02c\"/>\n";
  }
}

}  // namespace

std::string plot_pr_grid(const std::vector<EvalInput>& inputs, const EvalConfig& cfg,
                         double delta_s) {
  const bool known = std::any_of(cfg.deltas_s.begin(), cfg.deltas_s.end(),
                                 [&](double d) { return std::abs(d - delta_s) < 1e-9; });
  if (!known)
    throw MissingDelta("tolerance " + std::to_string(delta_s) +
                       " s is not in the evaluated set");

  // 4 x 3 grid of square-ish PR panels.
  constexpr int kCols = 4;
  constexpr double kW = 220.0, kH = 170.0, kGapX = 46.0, kGapY = 52.0;
  constexpr double kMarginX = 52.0, kMarginY = 40.0;
  const double width = 2 * kMarginX + kCols * kW + (kCols - 1) * kGapX;
  const double height = 2 * kMarginY + 3 * kH + 2 * kGapY;

  std::ostringstream out;
  open_svg(out, width, height);
  out << "<text x=\"" << fmt(kMarginX) << "\" y=\"16\" font-size=\"13\">"
      << "precision vs recall, tolerance " << fmt(delta_s) << " s</text>\n";

  for (int c = 0; c < kNumEventClasses; ++c) {
    const Panel p{kMarginX + (c % kCols) * (kW + kGapX),
                  kMarginY + (c / kCols) * (kH + kGapY), kW, kH};
    std::vector<std::vector<std::pair<double, double>>> preds(inputs.size());
    std::vector<std::vector<double>> gts(inputs.size());
    int n_gt = 0;
    for (size_t m = 0; m < inputs.size(); ++m) {
      for (const SpottedEvent& e : inputs[m].predictions)
        if (e.class_id == static_cast<EventClass>(c))
          preds[m].push_back({e.time_s, e.confidence});
      for (const SpottedEvent& g : inputs[m].ground_truth)
        if (g.class_id == static_cast<EventClass>(c)) gts[m].push_back(g.time_s);
      n_gt += static_cast<int>(gts[m].size());
    }

    const std::string name(event_class_name(static_cast<EventClass>(c)));
    out << "<text x=\"" << fmt(p.px(0.5)) << "\" y=\"" << fmt(p.py(0) + 24)
        << "\" text-anchor=\"middle\" font-size=\"9\">recall</text>\n";
    if (n_gt == 0) {
      panel_frame(out, p, name + " (no ground truth)", true);
      continue;
    }

    const std::vector<PrPoint> curve = pr_curve(preds, gts, delta_s);
    char ap[32];
    std::snprintf(ap, sizeof(ap), " (AP %.2f)", ap_11pt(curve));
    panel_frame(out, p, name + ap, true);

    std::vector<std::pair<double, double>> pts;
    for (const PrPoint& point : curve)
      if (point.any_prediction)
        pts.push_back({p.px(point.recall), p.py(point.precision)});
    polyline(out, pts, "#1f77b4", 1.5);
  }
  out << "</svg>\n";
  return out.str();
}

std::string plot_confidence_traces(const ConfidenceCurve& curve,
                                   const std::vector<SpottedEvent>& ground_truth,
                                   double nms_window_s, double confidence_threshold) {
  const double t_max = curve.time_s.empty() ? 1.0 : std::max(1.0, curve.time_s.back());
  const std::vector<SpottedEvent> survivors = spot_curve(curve, nms_window_s, 0.0);

  // One row per class, one column per post-processing stage.
  constexpr double kW = 300.0, kH = 78.0, kGapX = 36.0, kGapY = 26.0;
  constexpr double kMarginX = 96.0, kMarginY = 56.0;
  const double width = 2 * kMarginX + 3 * kW + 2 * kGapX;
  const double height = 2 * kMarginY + kNumEventClasses * kH +
                        (kNumEventClasses - 1) * kGapY;

  std::ostringstream out;
  open_svg(out, width, height);
  out << "<text x=\"" << fmt(kMarginX) << "\" y=\"18\" font-size=\"13\">"
      << "confidence traces: " << curve.match_id << " (nms " << fmt(nms_window_s)
      << " s, threshold " << fmt(confidence_threshold) << ")</text>\n";
  const char* column_titles[3] = {"raw", "nms", "nms + threshold"};
  for (int col = 0; col < 3; ++col)
    out << "<text x=\"" << fmt(kMarginX + col * (kW + kGapX) + kW / 2) << "\" y=\""
        << fmt(kMarginY - 12) << "\" text-anchor=\"middle\">" << column_titles[col]
        << "</text>\n";

  for (int c = 0; c < kNumEventClasses; ++c) {
    const double row_y = kMarginY + c * (kH + kGapY);
    out << "<text x=\"" << fmt(kMarginX - 10) << "\" y=\"" << fmt(row_y + kH / 2 + 4)
        << "\" text-anchor=\"end\" font-size=\"10\">"
        << event_class_name(static_cast<EventClass>(c)) << "</text>\n";

    std::vector<std::pair<double, double>> kept, thresholded;
    for (const SpottedEvent& e : survivors) {
      if (e.class_id != static_cast<EventClass>(c)) continue;
      kept.push_back({e.time_s, e.confidence});
      if (e.confidence >= confidence_threshold)
        thresholded.push_back({e.time_s, e.confidence});
    }

    for (int col = 0; col < 3; ++col) {
      const Panel p{kMarginX + col * (kW + kGapX), row_y, kW, kH};
      panel_frame(out, p, "", false);
      gt_markers(out, p, ground_truth, static_cast<EventClass>(c), t_max);
      if (col == 0) {
        std::vector<std::pair<double, double>> pts;
        pts.reserve(curve.time_s.size());
        for (size_t i = 0; i < curve.time_s.size(); ++i)
          pts.push_back({p.px(curve.time_s[i] / t_max),
                         p.py(curve.scores[i][static_cast<size_t>(c)])});
        polyline(out, pts, "#1f77b4", 1.0);
      } else {
        stems(out, p, col == 1 ? kept : thresholded, t_max);
      }
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace footspot
