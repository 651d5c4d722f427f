#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace footspot {

enum class EntityKind { TeamA, TeamB, Ball };

// The 12 event classes, in the fixed reporting order used everywhere
// (CSV columns, label vectors, evaluation tables).
enum class EventClass : int {
  Out = 0,
  Stop,
  Goal,
  GoalKick,
  CornerKick,
  ThrowIn,
  Offside,
  Foul,
  YellowCard,
  RedCard,
  GoalChance,
  Shot,
};

inline constexpr int kNumEventClasses = 12;

// snake_case name used in files ("goal_kick", ...).
std::string_view event_class_name(EventClass c);
// Throws FormatError on an unknown name.
EventClass event_class_from_name(std::string_view name);

struct EntityObservation {
  EntityKind kind;
  double x_m = 0.0;  // origin at pitch centre, +x toward one goal
  double y_m = 0.0;
};

struct TrackedFrame {
  int64_t frame_index = 0;
  std::vector<EntityObservation> entities;
};

struct EventAnnotation {
  EventClass class_id;
  int64_t frame_index = 0;
};

// One match worth of tracking data. Treated as immutable once loaded.
struct TrackedMatch {
  std::string match_id;
  double pitch_length_m = 105.0;
  double pitch_width_m = 68.0;
  double fps = 0.0;
  std::vector<TrackedFrame> frames;
  std::vector<EventAnnotation> events;
};

// Structural invariants: positive pitch dims and fps, strictly increasing
// frame indices, at most one ball and at most 30 entities per frame,
// positions within pitch bounds plus 5 m slack, events within the frame
// range. Throws InvariantViolation naming the offending record.
void validate_match(const TrackedMatch& match);

// JSON-lines reader. First line must be the header record; frame records
// must precede event records. Referee entities are dropped with a warning
// on stderr. Throws MissingHeader / MalformedRecord (with line numbers) /
// InvariantViolation / IoError.
TrackedMatch load_match(const std::filesystem::path& path);

// Canonical writer; load_match followed by save_match reproduces a
// canonical file byte for byte.
void save_match(const TrackedMatch& match, const std::filesystem::path& path);

// Keeps frames nearest the ideal fps/target_fps grid so the mean kept rate
// equals target_fps; kept frames are renumbered 0..m-1 and event indices are
// remapped to the nearest kept frame (ties toward the earlier frame).
// target_fps == fps returns the match unchanged. Throws BadRate.
TrackedMatch resample(const TrackedMatch& match, double target_fps);

// A fixed-length window of frames plus its multi-label annotation.
// Holds pointers into the source match, which must outlive the chunk.
struct WindowChunk {
  std::string match_id;
  int64_t start_frame = 0;   // may be negative for clamped inference chunks
  int64_t end_frame = 0;     // exclusive
  int64_t center_frame = 0;
  double pitch_length_m = 0.0;
  double pitch_width_m = 0.0;
  std::vector<const TrackedFrame*> frames;
  std::array<uint8_t, kNumEventClasses> label{};  // 1 iff event in [start, end)
};

// Non-overlapping-by-default training grid: windows of round(window_s*fps)
// frames every round(stride_s*fps) frames; a trailing partial window is
// dropped. Expects a match already resampled to the working rate.
std::vector<WindowChunk> make_training_chunks(const TrackedMatch& match,
                                              double window_s, double stride_s);

// One chunk per sampled frame, centred on it; out-of-range positions clamp
// to the first/last frame. Predictions made from chunk i belong to the
// timestamp of frame i.
std::vector<WindowChunk> make_inference_chunks(const TrackedMatch& match,
                                               double window_s);

}  // namespace footspot
