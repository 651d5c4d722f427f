#include "footspot/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "footspot/errors.hpp"
#include "json.hpp"

namespace footspot {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kClassNames[kNumEventClasses] = {
    "out",         "stop",   "goal",        "goal_kick",
    "corner_kick", "throw_in", "offside",   "foul",
    "yellow_card", "red_card", "goal_chance", "shot",
};

std::string line_msg(size_t line_no, const std::string& what) {
  return "line " + std::to_string(line_no) + ": " + what;
}

void require_keys(const json& rec, std::initializer_list<const char*> keys,
                  size_t line_no, const char* record_kind) {
  for (const char* k : keys) {
    if (!rec.contains(k)) {
      throw MalformedRecord(line_msg(line_no, std::string(record_kind) +
                                                  " record missing key '" + k + "'"));
    }
  }
  for (auto it = rec.begin(); it != rec.end(); ++it) {
    bool known = false;
    for (const char* k : keys) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw MalformedRecord(line_msg(line_no, std::string(record_kind) +
                                                  " record has unknown key '" +
                                                  it.key() + "'"));
    }
  }
}

double get_number(const json& rec, const char* key, size_t line_no) {
  const auto& v = rec.at(key);
  if (!v.is_number()) {
    throw MalformedRecord(line_msg(line_no, std::string("'") + key + "' must be a number"));
  }
  return v.get<double>();
}

int64_t get_integer(const json& rec, const char* key, size_t line_no) {
  const auto& v = rec.at(key);
  if (!v.is_number_integer()) {
    throw MalformedRecord(line_msg(line_no, std::string("'") + key + "' must be an integer"));
  }
  return v.get<int64_t>();
}

}  // namespace

std::string_view event_class_name(EventClass c) {
  return kClassNames[static_cast<int>(c)];
}

EventClass event_class_from_name(std::string_view name) {
  for (int i = 0; i < kNumEventClasses; ++i) {
    if (kClassNames[i] == name) {
      return static_cast<EventClass>(i);
    }
  }
  throw FormatError("unknown event class '" + std::string(name) + "'");
}

void validate_match(const TrackedMatch& match) {
  if (match.pitch_length_m <= 0.0 || match.pitch_width_m <= 0.0) {
    throw InvariantViolation("match " + match.match_id + ": non-positive pitch dimensions");
  }
  if (match.fps <= 0.0) {
    throw InvariantViolation("match " + match.match_id + ": non-positive fps");
  }
  const double x_bound = match.pitch_length_m / 2.0 + 5.0;
  const double y_bound = match.pitch_width_m / 2.0 + 5.0;
  int64_t prev_index = -1;
  for (const TrackedFrame& f : match.frames) {
    if (f.frame_index <= prev_index) {
      throw InvariantViolation("match " + match.match_id + ": frame " +
                               std::to_string(f.frame_index) +
                               " not strictly increasing");
    }
    prev_index = f.frame_index;
    if (f.entities.size() > 30) {
      throw InvariantViolation("match " + match.match_id + ": frame " +
                               std::to_string(f.frame_index) + " has " +
                               std::to_string(f.entities.size()) + " entities (max 30)");
    }
    int balls = 0;
    for (const EntityObservation& e : f.entities) {
      if (e.kind == EntityKind::Ball) {
        ++balls;
      }
      if (std::abs(e.x_m) > x_bound || std::abs(e.y_m) > y_bound) {
        throw InvariantViolation("match " + match.match_id + ": frame " +
                                 std::to_string(f.frame_index) +
                                 " entity outside pitch bounds plus slack");
      }
    }
    if (balls > 1) {
      throw InvariantViolation("match " + match.match_id + ": frame " +
                               std::to_string(f.frame_index) + " has " +
                               std::to_string(balls) + " balls");
    }
  }
  const int64_t last = match.frames.empty() ? -1 : match.frames.back().frame_index;
  for (const EventAnnotation& ev : match.events) {
    if (ev.frame_index < 0 || ev.frame_index > last) {
      throw InvariantViolation(
          "match " + match.match_id + ": event frame_index " +
          std::to_string(ev.frame_index) + " beyond last frame " + std::to_string(last));
    }
  }
}

TrackedMatch load_match(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  TrackedMatch match;
  std::string line;
  size_t line_no = 0;
  bool have_header = false;
  bool seen_event = false;
  int64_t dropped_referees = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      throw MalformedRecord(line_msg(line_no, "blank line"));
    }
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedRecord(line_msg(line_no, e.what()));
    }
    if (!rec.is_object()) {
      throw MalformedRecord(line_msg(line_no, "record is not a JSON object"));
    }
    if (!have_header) {
      if (!rec.contains("match_id")) {
        throw MissingHeader("line 1 of '" + path.string() + "' is not a header record");
      }
      require_keys(rec, {"match_id", "pitch_length_m", "pitch_width_m", "fps"},
                   line_no, "header");
      if (!rec.at("match_id").is_string()) {
        throw MalformedRecord(line_msg(line_no, "'match_id' must be a string"));
      }
      match.match_id = rec.at("match_id").get<std::string>();
      match.pitch_length_m = get_number(rec, "pitch_length_m", line_no);
      match.pitch_width_m = get_number(rec, "pitch_width_m", line_no);
      match.fps = get_number(rec, "fps", line_no);
      have_header = true;
      continue;
    }
    if (rec.contains("frame") && rec.contains("entities")) {
      if (seen_event) {
        throw MalformedRecord(line_msg(line_no, "frame record after event records"));
      }
      require_keys(rec, {"frame", "entities"}, line_no, "frame");
      TrackedFrame frame;
      frame.frame_index = get_integer(rec, "frame", line_no);
      const auto& ents = rec.at("entities");
      if (!ents.is_array()) {
        throw MalformedRecord(line_msg(line_no, "'entities' must be an array"));
      }
      for (const auto& ent : ents) {
        if (!ent.is_object()) {
          throw MalformedRecord(line_msg(line_no, "entity is not a JSON object"));
        }
        require_keys(ent, {"kind", "x", "y"}, line_no, "entity");
        if (!ent.at("kind").is_string()) {
          throw MalformedRecord(line_msg(line_no, "entity 'kind' must be a string"));
        }
        const std::string kind = ent.at("kind").get<std::string>();
        EntityObservation obs;
        if (kind == "A") {
          obs.kind = EntityKind::TeamA;
        } else if (kind == "B") {
          obs.kind = EntityKind::TeamB;
        } else if (kind == "ball") {
          obs.kind = EntityKind::Ball;
        } else if (kind == "referee") {
          ++dropped_referees;  // tracked but not modelled
          continue;
        } else {
          throw MalformedRecord(line_msg(line_no, "unknown entity kind '" + kind + "'"));
        }
        obs.x_m = get_number(ent, "x", line_no);
        obs.y_m = get_number(ent, "y", line_no);
        frame.entities.push_back(obs);
      }
      match.frames.push_back(std::move(frame));
      continue;
    }
    if (rec.contains("event")) {
      require_keys(rec, {"event", "frame"}, line_no, "event");
      if (!rec.at("event").is_string()) {
        throw MalformedRecord(line_msg(line_no, "'event' must be a string"));
      }
      EventAnnotation ev;
      try {
        ev.class_id = event_class_from_name(rec.at("event").get<std::string>());
      } catch (const FormatError& e) {
        throw MalformedRecord(line_msg(line_no, e.what()));
      }
      ev.frame_index = get_integer(rec, "frame", line_no);
      match.events.push_back(ev);
      seen_event = true;
      continue;
    }
    throw MalformedRecord(line_msg(line_no, "record is neither frame nor event"));
  }
  if (!have_header) {
    throw MissingHeader("'" + path.string() + "' is empty");
  }
  if (dropped_referees > 0) {
    std::fprintf(stderr, "warning: match %s: dropped %lld referee entities\n",
                 match.match_id.c_str(), static_cast<long long>(dropped_referees));
  }
  validate_match(match);
  return match;
}

void save_match(const TrackedMatch& match, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  ordered_json header;
  header["match_id"] = match.match_id;
  header["pitch_length_m"] = match.pitch_length_m;
  header["pitch_width_m"] = match.pitch_width_m;
  header["fps"] = match.fps;
  out << header.dump() << '\n';
  for (const TrackedFrame& f : match.frames) {
    ordered_json rec;
    rec["frame"] = f.frame_index;
    ordered_json ents = ordered_json::array();
    for (const EntityObservation& e : f.entities) {
      ordered_json ent;
      switch (e.kind) {
        case EntityKind::TeamA:
          ent["kind"] = "A";
          break;
        case EntityKind::TeamB:
          ent["kind"] = "B";
          break;
        case EntityKind::Ball:
          ent["kind"] = "ball";
          break;
      }
      ent["x"] = e.x_m;
      ent["y"] = e.y_m;
      ents.push_back(std::move(ent));
    }
    rec["entities"] = std::move(ents);
    out << rec.dump() << '\n';
  }
  for (const EventAnnotation& ev : match.events) {
    ordered_json rec;
    rec["event"] = std::string(event_class_name(ev.class_id));
    rec["frame"] = ev.frame_index;
    out << rec.dump() << '\n';
  }
  if (!out) {
    throw IoError("failed while writing '" + path.string() + "'");
  }
}

TrackedMatch resample(const TrackedMatch& match, double target_fps) {
  if (target_fps <= 0.0) {
    throw BadRate("target_fps must be positive, got " + std::to_string(target_fps));
  }
  if (target_fps > match.fps) {
    throw BadRate("target_fps " + std::to_string(target_fps) + " above source rate " +
                  std::to_string(match.fps));
  }
  const double step = match.fps / target_fps;
  if (step <= 1.0 + 1e-12) {
    return match;  // already at the target rate
  }
  const int64_t n = static_cast<int64_t>(match.frames.size());
  TrackedMatch out;
  out.match_id = match.match_id;
  out.pitch_length_m = match.pitch_length_m;
  out.pitch_width_m = match.pitch_width_m;
  out.fps = target_fps;
  std::vector<int64_t> kept_original;  // original frame_index of kept frames
  int64_t prev_pos = -1;
  for (int64_t j = 0;; ++j) {
    const int64_t pos = std::llround(static_cast<double>(j) * step);
    if (pos >= n) {
      break;
    }
    if (pos == prev_pos) {
      continue;
    }
    prev_pos = pos;
    TrackedFrame f = match.frames[static_cast<size_t>(pos)];
    kept_original.push_back(f.frame_index);
    f.frame_index = static_cast<int64_t>(out.frames.size());
    out.frames.push_back(std::move(f));
  }
  for (const EventAnnotation& ev : match.events) {
    if (kept_original.empty()) {
      break;
    }
    // Nearest kept frame by original index; ties go to the earlier frame.
    const auto it = std::lower_bound(kept_original.begin(), kept_original.end(),
                                     ev.frame_index);
    size_t best;
    if (it == kept_original.end()) {
      best = kept_original.size() - 1;
    } else if (it == kept_original.begin()) {
      best = 0;
    } else {
      const size_t hi = static_cast<size_t>(it - kept_original.begin());
      const size_t lo = hi - 1;
      const int64_t d_lo = ev.frame_index - kept_original[lo];
      const int64_t d_hi = kept_original[hi] - ev.frame_index;
      best = (d_hi < d_lo) ? hi : lo;
    }
    out.events.push_back({ev.class_id, static_cast<int64_t>(best)});
  }
  return out;
}

namespace {

std::array<uint8_t, kNumEventClasses> window_label(const TrackedMatch& match,
                                                   int64_t start, int64_t end) {
  std::array<uint8_t, kNumEventClasses> label{};
  for (const EventAnnotation& ev : match.events) {
    if (ev.frame_index >= start && ev.frame_index < end) {
      label[static_cast<size_t>(ev.class_id)] = 1;
    }
  }
  return label;
}

int64_t window_frames(double window_s, double fps) {
  return std::max<int64_t>(1, std::llround(window_s * fps));
}

}  // namespace

std::vector<WindowChunk> make_training_chunks(const TrackedMatch& match,
                                              double window_s, double stride_s) {
  if (match.frames.empty()) {
    throw EmptyMatch("match " + match.match_id + " has no frames");
  }
  const int64_t n = static_cast<int64_t>(match.frames.size());
  const int64_t w = window_frames(window_s, match.fps);
  const int64_t s = std::max<int64_t>(1, std::llround(stride_s * match.fps));
  std::vector<WindowChunk> chunks;
  for (int64_t start = 0; start + w <= n; start += s) {
    WindowChunk c;
    c.match_id = match.match_id;
    c.start_frame = start;
    c.end_frame = start + w;
    c.center_frame = start + w / 2;
    c.pitch_length_m = match.pitch_length_m;
    c.pitch_width_m = match.pitch_width_m;
    c.frames.reserve(static_cast<size_t>(w));
    for (int64_t i = start; i < start + w; ++i) {
      c.frames.push_back(&match.frames[static_cast<size_t>(i)]);
    }
    c.label = window_label(match, start, start + w);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

std::vector<WindowChunk> make_inference_chunks(const TrackedMatch& match,
                                               double window_s) {
  if (match.frames.empty()) {
    throw EmptyMatch("match " + match.match_id + " has no frames");
  }
  const int64_t n = static_cast<int64_t>(match.frames.size());
  const int64_t w = window_frames(window_s, match.fps);
  const int64_t half = w / 2;
  std::vector<WindowChunk> chunks;
  chunks.reserve(static_cast<size_t>(n));
  for (int64_t p = 0; p < n; ++p) {
    WindowChunk c;
    c.match_id = match.match_id;
    c.start_frame = p - half;
    c.end_frame = p - half + w;
    c.center_frame = p;
    c.pitch_length_m = match.pitch_length_m;
    c.pitch_width_m = match.pitch_width_m;
    c.frames.reserve(static_cast<size_t>(w));
    for (int64_t i = c.start_frame; i < c.end_frame; ++i) {
      const int64_t j = std::clamp<int64_t>(i, 0, n - 1);
      c.frames.push_back(&match.frames[static_cast<size_t>(j)]);
    }
    c.label = window_label(match, c.start_frame, c.end_frame);
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace footspot
