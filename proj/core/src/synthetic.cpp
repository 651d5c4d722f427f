#include "footspot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include "footspot/errors.hpp"
#include "footspot/rng.hpp"

namespace footspot {
namespace {

constexpr int kPlayers = 22;

// Resting formation, team A defending negative x. Index 0 and 11 are keepers.
constexpr std::array<std::array<double, 2>, kPlayers> kAnchors = {{
    {-45.0, 0.0},
    {-33.0, -18.0},
    {-33.0, -6.0},
    {-33.0, 6.0},
    {-33.0, 18.0},
    {-18.0, -15.0},
    {-18.0, -5.0},
    {-18.0, 5.0},
    {-18.0, 15.0},
    {-6.0, -8.0},
    {-6.0, 8.0},
    {45.0, 0.0},
    {33.0, 18.0},
    {33.0, 6.0},
    {33.0, -6.0},
    {33.0, -18.0},
    {18.0, 15.0},
    {18.0, 5.0},
    {18.0, -5.0},
    {18.0, -15.0},
    {6.0, 8.0},
    {6.0, -8.0},
}};

// A swap atom trades a small team-A position group with its team-B mirror:
// each listed player runs to the listed partner's resting spot and holds it.
// While a swap is held the occupied positions are exactly the resting
// formation, so per-frame position statistics are unchanged in every network
// layer; what flips is which team's shirts stand in which region. That
// signature lives in the position-team correlation, which per-channel
// standardization cannot erase, so it reads identically under batch and
// running statistics.
struct SwapAtom {
  std::array<int, 2> a, b;  // pair i: a[i] trades spots with b[i]; -1 pads
  int pairs;
};

constexpr std::array<SwapAtom, 6> kAtoms = {{
    {{1, 2}, {12, 13}, 2},    // left backs with their mirrors
    {{3, 4}, {14, 15}, 2},    // right backs
    {{5, 6}, {16, 17}, 2},    // left midfielders
    {{7, 8}, {18, 19}, 2},    // right midfielders
    {{9, 10}, {20, 21}, 2},   // forwards
    {{0, -1}, {11, -1}, 1},   // keepers
}};

// A pattern is a subset of atoms swapped simultaneously. Class c holds
// pattern 2c just before the timestamp and pattern 2c+1 just after: every
// half identifies the class on its own, while the before/after order is the
// fine timing cue that favors temporally-split pooling. The 24 patterns are
// the 15 two-atom subsets followed by the first 9 three-atom subsets in
// lexicographic order.
constexpr std::array<std::array<int, 3>, 2 * kNumEventClasses> kPatterns = {{
    {0, 1, -1}, {0, 2, -1}, {0, 3, -1}, {0, 4, -1}, {0, 5, -1},
    {1, 2, -1}, {1, 3, -1}, {1, 4, -1}, {1, 5, -1}, {2, 3, -1},
    {2, 4, -1}, {2, 5, -1}, {3, 4, -1}, {3, 5, -1}, {4, 5, -1},
    {0, 1, 2},  {0, 1, 3},  {0, 1, 4},  {0, 1, 5},  {0, 2, 3},
    {0, 2, 4},  {0, 2, 5},  {0, 3, 4},  {0, 3, 5},
}};

constexpr double kPhaseOffsetS = 1.55;  // phase centres sit at t_e -/+ this
constexpr double kEdgeMarginS = 6.0;    // keep full signatures inside the match
constexpr double kMinEventGapS = 30.0;  // hard floor between consecutive events

// Plateau with raised-cosine edges on (-1, 1): full weight inside |u| <= 0.5.
double plateau(double u) {
  const double a = std::abs(u);
  if (a >= 1.0) return 0.0;
  if (a <= 0.5) return 1.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (a - 0.5) / 0.5));
}

struct MoveOrder {
  int player;
  std::array<double, 2> target;
};

struct TimedPull {
  double center_s, half_width_s, weight_max;
  std::vector<MoveOrder> orders;
};

// One phase of one event: every pair in the pattern's atoms trades spots,
// except that one random pair may sit out, so exact headcounts cannot be
// memorized. A sitting pair leaves the resting cloud intact.
TimedPull make_phase(const std::array<int, 3>& pattern, double center_s,
                     double half_width_s, double weight_max, Rng& rng) {
  std::vector<std::array<int, 2>> swaps;
  for (int ai : pattern) {
    if (ai < 0) continue;
    const SwapAtom& atom = kAtoms[static_cast<size_t>(ai)];
    for (int r = 0; r < atom.pairs; ++r)
      swaps.push_back({atom.a[static_cast<size_t>(r)], atom.b[static_cast<size_t>(r)]});
  }
  if (rng.below(3) == 0) {
    const size_t drop = rng.below(swaps.size());
    swaps.erase(swaps.begin() + static_cast<ptrdiff_t>(drop));
  }
  TimedPull pull{center_s, half_width_s, weight_max, {}};
  for (const auto& [pa, pb] : swaps) {
    const auto& aa = kAnchors[static_cast<size_t>(pa)];
    const auto& ab = kAnchors[static_cast<size_t>(pb)];
    pull.orders.push_back({pa, {ab[0], ab[1]}});
    pull.orders.push_back({pb, {aa[0], aa[1]}});
  }
  return pull;
}

struct DriftParams {
  double amp_x, amp_y, freq_x, freq_y, phase_x, phase_y;
};

}  // namespace

TrackedMatch generate_match(const GeneratorConfig& config) {
  if (config.duration_s <= 0.0) throw ConfigError("duration_s must be positive");
  if (config.fps <= 0.0) throw ConfigError("fps must be positive");
  if (config.pitch_length_m <= 0.0 || config.pitch_width_m <= 0.0)
    throw ConfigError("pitch dimensions must be positive");
  if (config.ball_coverage_fraction < 0.0 || config.ball_coverage_fraction > 1.0)
    throw ConfigError("ball_coverage_fraction must lie in [0, 1]");
  if (config.noise_std_m < 0.0) throw ConfigError("noise_std_m must be non-negative");

  int total_events = 0;
  for (size_t c = 0; c < kNumEventClasses; ++c) {
    if (config.events_per_class[c] < 0)
      throw ConfigError("events_per_class must be non-negative");
    total_events += config.events_per_class[c];
  }

  const int64_t n_frames = std::llround(config.duration_s * config.fps);
  if (n_frames < 1) throw ConfigError("duration_s * fps must give at least one frame");

  Rng rng(config.seed);

  // Slow per-player sinusoidal drift keeps the background alive without
  // masking the planted signatures.
  std::array<DriftParams, kPlayers> drift;
  for (auto& d : drift) {
    d.amp_x = rng.uniform(1.0, 2.5);
    d.amp_y = rng.uniform(1.0, 2.5);
    d.freq_x = rng.uniform(0.004, 0.012);
    d.freq_y = rng.uniform(0.004, 0.012);
    d.phase_x = rng.uniform(0.0, 2.0 * std::numbers::pi);
    d.phase_y = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }

  // Non-event excursions: a lone player strolls to a random spot roughly
  // every 40 s. Pooling has to spend capacity telling these apart from
  // genuine swaps.
  std::vector<TimedPull> pulls;
  for (double t = 20.0 + rng.uniform(-5.0, 5.0); t < config.duration_s - 10.0;
       t += rng.uniform(30.0, 50.0)) {
    const int player = static_cast<int>(rng.below(kPlayers));
    const std::array<double, 2> spot = {
        rng.uniform(-0.42, 0.42) * config.pitch_length_m,
        rng.uniform(-0.42, 0.42) * config.pitch_width_m};
    pulls.push_back({t, 2.5, 0.8, {{player, spot}}});
  }

  // Evenly spaced event slots with jitter, classes interleaved so repeats of
  // one class land far apart.
  std::vector<EventAnnotation> events;
  if (total_events > 0) {
    const double t_lo = kEdgeMarginS;
    const double t_hi = config.duration_s - kEdgeMarginS;
    const double span = t_hi - t_lo;
    if (span < 0.0 || static_cast<double>(total_events - 1) * kMinEventGapS > span)
      throw ConfigError("requested events do not fit the match duration");

    std::vector<int> class_sequence;
    {
      auto remaining = config.events_per_class;
      while (static_cast<int>(class_sequence.size()) < total_events) {
        std::vector<int> round;
        for (int c = 0; c < static_cast<int>(kNumEventClasses); ++c)
          if (remaining[static_cast<size_t>(c)] > 0) round.push_back(c);
        rng.shuffle(round);
        for (int c : round) {
          class_sequence.push_back(c);
          --remaining[static_cast<size_t>(c)];
        }
      }
    }

    const double pitch = total_events > 1 ? span / (total_events - 1) : 0.0;
    const double jitter = std::min(2.0, std::max(0.0, (pitch - kMinEventGapS) / 2.0));
    for (int k = 0; k < total_events; ++k) {
      const double base_t = total_events > 1 ? t_lo + k * pitch : 0.5 * config.duration_s;
      const double t_e = base_t + rng.uniform(-jitter, jitter);
      const int class_id = class_sequence[static_cast<size_t>(k)];
      const int64_t frame = std::clamp<int64_t>(std::llround(t_e * config.fps), 0,
                                                n_frames - 1);
      events.push_back({static_cast<EventClass>(class_id), frame});

      // Per-event nuisances: tempo and headcount vary so that "how much
      // motion" is useless for classification. Offset plus half-width stays
      // within +/-3 s of the timestamp; weight near 1 keeps the held cloud
      // on the resting spots.
      const double weight_max = rng.uniform(0.95, 1.0);
      const double half_width = rng.uniform(1.3, 1.45);
      for (int phase = 0; phase < 2; ++phase) {
        const auto& pattern = kPatterns[static_cast<size_t>(2 * class_id + phase)];
        const double center = t_e + (phase == 0 ? -kPhaseOffsetS : kPhaseOffsetS);
        pulls.push_back(make_phase(pattern, center, half_width, weight_max, rng));
      }
    }
  }

  // Ball observations are sparse; spread the covered frames uniformly.
  const int64_t ball_count = std::clamp<int64_t>(
      std::llround(config.ball_coverage_fraction * static_cast<double>(n_frames)), 0,
      n_frames);
  std::vector<uint8_t> ball_present(static_cast<size_t>(n_frames), 0);
  for (int64_t k = 0; k < ball_count; ++k) {
    const auto idx = static_cast<size_t>(k * n_frames / ball_count);
    ball_present[idx] = 1;
  }

  TrackedMatch match;
  match.match_id = config.match_id.empty()
                       ? "synthetic_" + std::to_string(config.seed)
                       : config.match_id;
  match.pitch_length_m = config.pitch_length_m;
  match.pitch_width_m = config.pitch_width_m;
  match.fps = config.fps;
  match.events = std::move(events);

  const double x_lim = 0.5 * config.pitch_length_m + 4.9;
  const double y_lim = 0.5 * config.pitch_width_m + 4.9;
  const double two_pi = 2.0 * std::numbers::pi;

  match.frames.reserve(static_cast<size_t>(n_frames));
  for (int64_t f = 0; f < n_frames; ++f) {
    const double t = static_cast<double>(f) / config.fps;
    TrackedFrame frame;
    frame.frame_index = f;
    frame.entities.reserve(kPlayers + 1);

    for (int p = 0; p < kPlayers; ++p) {
      const DriftParams& d = drift[static_cast<size_t>(p)];
      const auto& a = kAnchors[static_cast<size_t>(p)];
      double x = a[0] + d.amp_x * std::sin(two_pi * d.freq_x * t + d.phase_x);
      double y = a[1] + d.amp_y * std::sin(two_pi * d.freq_y * t + d.phase_y);

      // Blend toward every active target; weights are capped at 1 in total
      // so overlapping pulls cannot fling a player off the pitch.
      double total_w = 0.0, tx = 0.0, ty = 0.0;
      for (const TimedPull& pull : pulls) {
        const double w =
            pull.weight_max * plateau((t - pull.center_s) / pull.half_width_s);
        if (w <= 0.0) continue;
        for (const MoveOrder& order : pull.orders) {
          if (order.player != p) continue;
          total_w += w;
          tx += w * order.target[0];
          ty += w * order.target[1];
        }
      }
      if (total_w > 0.0) {
        const double scale = total_w > 1.0 ? 1.0 / total_w : 1.0;
        x = (1.0 - total_w * scale) * x + scale * tx;
        y = (1.0 - total_w * scale) * y + scale * ty;
      }

      x += rng.normal(0.0, config.noise_std_m);
      y += rng.normal(0.0, config.noise_std_m);
      frame.entities.push_back({p < 11 ? EntityKind::TeamA : EntityKind::TeamB,
                                std::clamp(x, -x_lim, x_lim),
                                std::clamp(y, -y_lim, y_lim)});
    }

    if (ball_present[static_cast<size_t>(f)]) {
      double bx = 0.3 * config.pitch_length_m * std::sin(two_pi * 0.007 * t);
      double by = 0.3 * config.pitch_width_m * std::sin(two_pi * 0.011 * t + 1.0);
      bx += rng.normal(0.0, config.noise_std_m);
      by += rng.normal(0.0, config.noise_std_m);
      frame.entities.push_back({EntityKind::Ball, std::clamp(bx, -x_lim, x_lim),
                                std::clamp(by, -y_lim, y_lim)});
    }

    match.frames.push_back(std::move(frame));
  }

  validate_match(match);
  return match;
}

DatasetPaths generate_dataset(uint64_t base_seed, int n_train, int n_val, int n_test,
                              const GeneratorConfig& base,
                              const std::filesystem::path& out_dir) {
  if (n_train < 0 || n_val < 0 || n_test < 0)
    throw ConfigError("split sizes must be non-negative");

  DatasetPaths paths;
  const struct {
    const char* role;
    int count;
    uint64_t stream;
    std::vector<std::filesystem::path>* out;
  } splits[] = {{"train", n_train, 1000, &paths.train},
                {"val", n_val, 2000, &paths.val},
                {"test", n_test, 3000, &paths.test}};

  for (const auto& split : splits) {
    const std::filesystem::path dir = out_dir / split.role;
    std::filesystem::create_directories(dir);
    for (int i = 0; i < split.count; ++i) {
      GeneratorConfig cfg = base;
      cfg.seed = Rng::mix(base_seed, split.stream + static_cast<uint64_t>(i));
      cfg.match_id = std::string(split.role) + "_" + std::to_string(i);
      const TrackedMatch match = generate_match(cfg);
      std::filesystem::path file = dir / (cfg.match_id + ".jsonl");
      save_match(match, file);
      split.out->push_back(std::move(file));
    }
  }
  return paths;
}

}  // namespace footspot
