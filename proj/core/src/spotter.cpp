#include "footspot/spotter.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "footspot/encoder.hpp"
#include "footspot/errors.hpp"
#include "footspot/graph.hpp"

namespace footspot {
namespace {

constexpr double kProbFloor = 1e-9;

std::string curve_header() {
  std::string h = "time_s";
  for (int c = 0; c < kNumEventClasses; ++c) {
    h += ',';
    h += event_class_name(static_cast<EventClass>(c));
  }
  return h;
}

double parse_double(const std::string& field, const std::filesystem::path& path,
                    size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw FormatError(path.string() + ":" + std::to_string(line_no) +
                      ": not a number: '" + field + "'");
  return value;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

}  // namespace

ConfidenceCurve score_match(SpottingModel& model, const TrackedMatch& match) {
  const TrackedMatch working = resample(match, model.cfg.fps);
  const auto n = static_cast<int64_t>(working.frames.size());

  ConfidenceCurve curve;
  curve.match_id = working.match_id;
  curve.fps = working.fps;
  if (n == 0) return curve;

  // Every window is built from these shared per-frame embeddings; encoding
  // dominates the cost, so each frame is pushed through the GCN exactly once.
  std::vector<Tensor> embeddings;
  embeddings.reserve(static_cast<size_t>(n));
  for (const TrackedFrame& frame : working.frames) {
    const FrameGraph graph =
        build_graph(frame, working.pitch_length_m, working.pitch_width_m);
    embeddings.push_back(encode_frame(graph, model.encoder, Mode::Eval).vec);
  }

  const int64_t w = std::max<int64_t>(1, std::llround(model.cfg.window_s * working.fps));
  const int64_t half = w / 2;

  curve.time_s.reserve(static_cast<size_t>(n));
  curve.scores.reserve(static_cast<size_t>(n));
  std::vector<Tensor> rows(static_cast<size_t>(w));
  for (int64_t p = 0; p < n; ++p) {
    const int64_t start = p - half;
    for (int64_t k = 0; k < w; ++k)
      rows[static_cast<size_t>(k)] =
          embeddings[static_cast<size_t>(std::clamp<int64_t>(start + k, 0, n - 1))];
    const Tensor probs = model.head_forward(stack_rows(rows));

    curve.time_s.push_back(static_cast<double>(p) / working.fps);
    std::array<double, kNumEventClasses> row{};
    for (int c = 0; c < kNumEventClasses; ++c)
      row[static_cast<size_t>(c)] =
          std::clamp(probs.values()[static_cast<size_t>(c)], kProbFloor, 1.0 - kProbFloor);
    curve.scores.push_back(row);
  }
  return curve;
}

std::vector<std::pair<double, double>> nms_1d(
    const std::vector<std::pair<double, double>>& points, double window_s) {
  if (window_s < 0.0) throw ConfigError("nms window must be non-negative");

  std::vector<size_t> order(points.size());
  for (size_t i = 0; i < points.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (points[a].second != points[b].second) return points[a].second > points[b].second;
    return points[a].first < points[b].first;
  });

  std::vector<char> suppressed(points.size(), 0);
  std::vector<std::pair<double, double>> kept;
  for (size_t idx : order) {
    if (suppressed[idx]) continue;
    kept.push_back(points[idx]);
    for (size_t j = 0; j < points.size(); ++j)
      if (j != idx && std::abs(points[j].first - points[idx].first) < window_s)
        suppressed[j] = 1;
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

std::vector<SpottedEvent> spot_curve(const ConfidenceCurve& curve, double nms_window_s,
                                     double min_confidence) {
  std::vector<SpottedEvent> events;
  std::vector<std::pair<double, double>> points(curve.time_s.size());
  for (int c = 0; c < kNumEventClasses; ++c) {
    for (size_t i = 0; i < curve.time_s.size(); ++i)
      points[i] = {curve.time_s[i], curve.scores[i][static_cast<size_t>(c)]};
    for (const auto& [t, conf] : nms_1d(points, nms_window_s))
      if (conf >= min_confidence)
        events.push_back({static_cast<EventClass>(c), t, conf});
  }
  return events;
}

std::vector<SpottedEvent> spot(SpottingModel& model, const TrackedMatch& match,
                               double nms_window_s, double min_confidence) {
  return spot_curve(score_match(model, match), nms_window_s, min_confidence);
}

void write_curve_csv(const ConfidenceCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << curve_header() << '\n';
  out.precision(10);
  for (size_t i = 0; i < curve.time_s.size(); ++i) {
    out << curve.time_s[i];
    for (double s : curve.scores[i]) out << ',' << s;
    out << '\n';
  }
  if (!out.flush()) throw IoError("short write to " + path.string());
}

ConfidenceCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw FormatError(path.string() + ": empty curve file");
  if (line == curve_header() + "\r") line.pop_back();
  if (line != curve_header())
    throw FormatError(path.string() + ": unexpected curve header: '" + line + "'");

  ConfidenceCurve curve;
  curve.match_id = path.stem().string();
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 1 + kNumEventClasses)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected " + std::to_string(1 + kNumEventClasses) +
                        " fields, got " + std::to_string(fields.size()));
    curve.time_s.push_back(parse_double(fields[0], path, line_no));
    std::array<double, kNumEventClasses> row{};
    for (int c = 0; c < kNumEventClasses; ++c)
      row[static_cast<size_t>(c)] = parse_double(fields[static_cast<size_t>(c) + 1], path, line_no);
    curve.scores.push_back(row);
  }
  if (curve.time_s.size() >= 2 && curve.time_s[1] > curve.time_s[0])
    curve.fps = 1.0 / (curve.time_s[1] - curve.time_s[0]);
  return curve;
}

void write_predictions_csv(const std::vector<SpottedEvent>& events,
                           const std::filesystem::path& path) {
  std::vector<SpottedEvent> sorted = events;
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    return a.time_s < b.time_s;
  });

  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "class,time_s,confidence\n";
  out.precision(10);
  for (const SpottedEvent& e : sorted)
    out << event_class_name(e.class_id) << ',' << e.time_s << ',' << e.confidence << '\n';
  if (!out.flush()) throw IoError("short write to " + path.string());
}

std::vector<SpottedEvent> read_predictions_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw FormatError(path.string() + ": empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "class,time_s,confidence")
    throw FormatError(path.string() + ": unexpected predictions header: '" + line + "'");

  std::vector<SpottedEvent> events;
  size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != 3)
      throw FormatError(path.string() + ":" + std::to_string(line_no) +
                        ": expected 3 fields, got " + std::to_string(fields.size()));
    SpottedEvent e;
    e.class_id = event_class_from_name(fields[0]);
    e.time_s = parse_double(fields[1], path, line_no);
    e.confidence = parse_double(fields[2], path, line_no);
    events.push_back(e);
  }
  return events;
}

}  // namespace footspot
