#include "footspot/replicate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "footspot/errors.hpp"
#include "footspot/evaluator.hpp"
#include "footspot/plotting.hpp"
#include "footspot/rng.hpp"
#include "footspot/spotter.hpp"
#include "footspot/trainer.hpp"
#include "json.hpp"

namespace footspot {
namespace {

struct TableRowSpec {
  const char* label;
  const char* method;
};

// Pooling section rows in the fixed comparison order.
constexpr TableRowSpec kPoolingRows[] = {
    {"AVG", "avg"},           {"AVG++", "avg++"},
    {"MAX", "max"},           {"MAX++", "max++"},
    {"NetRVLAD", "netrvlad"}, {"NetRVLAD++", "netrvlad++"},
    {"NetVLAD", "netvlad"},   {"NetVLAD++", "netvlad++"},
};

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw IoError("short write to " + path.string());
}

struct RowRun {
  ReplicateRow row;
  TrainResult train;
  std::vector<EvalInput> test_inputs;
  EvalReport report;
};

RowRun run_row(const std::string& section, const std::string& label,
               const std::string& method, double window_s, int max_epochs,
               uint64_t seed, const ReplicateConfig& cfg,
               const std::vector<TrackedMatch>& train_matches,
               const std::vector<TrackedMatch>& val_matches,
               const std::vector<TrackedMatch>& test_matches, std::ostream* log) {
  TrainConfig tc;
  tc.model.method = method;
  tc.model.clusters = cfg.clusters;
  tc.model.window_s = window_s;
  tc.model.fps = cfg.fps;
  tc.stride_s = window_s;
  tc.max_epochs = max_epochs;
  tc.seed = seed;

  const auto t0 = std::chrono::steady_clock::now();
  RowRun run;
  run.train = fit(train_matches, val_matches, tc);

  run.test_inputs.reserve(test_matches.size());
  for (const TrackedMatch& match : test_matches)
    run.test_inputs.push_back({spot(run.train.model, match, cfg.nms_window_s, 0.0),
                               ground_truth_events(match)});
  run.report = evaluate(run.test_inputs);
  const auto t1 = std::chrono::steady_clock::now();

  run.row.section = section;
  run.row.label = label;
  run.row.method = method;
  run.row.window_s = window_s;
  run.row.map = run.report.map;
  for (int c = 0; c < kNumEventClasses; ++c)
    run.row.ap_per_class[static_cast<size_t>(c)] =
        run.report.classes[static_cast<size_t>(c)].ap;
  run.row.epochs_run = run.train.epochs_run;
  run.row.train_seconds = std::chrono::duration<double>(t1 - t0).count();

  if (log)
    (*log) << section << ' ' << label << ": mAP " << run.row.map << " ("
           << run.row.epochs_run << " epochs, " << run.row.train_seconds << " s)\n";
  return run;
}

}  // namespace

ReplicateResult run_replicate(const ReplicateConfig& cfg, std::ostream* log) {
  if (cfg.n_train < 1 || cfg.n_val < 1 || cfg.n_test < 1)
    throw ConfigError("replicate needs at least one match per split");
  std::filesystem::create_directories(cfg.out_dir);

  ReplicateResult result;
  const DatasetPaths data =
      generate_dataset(cfg.seed, cfg.n_train, cfg.n_val, cfg.n_test, cfg.generator,
                       cfg.out_dir / "data");
  std::vector<TrackedMatch> train_matches, val_matches, test_matches;
  for (const auto& p : data.train) train_matches.push_back(load_match(p));
  for (const auto& p : data.val) val_matches.push_back(load_match(p));
  for (const auto& p : data.test) test_matches.push_back(load_match(p));
  for (const auto* split : {&data.train, &data.val, &data.test})
    for (const auto& p : *split) result.artifacts.push_back(p);

  // Pooling section: all 8 methods at the headline window.
  std::vector<RowRun> pooling_runs;
  int headline_index = -1;
  for (size_t i = 0; i < std::size(kPoolingRows); ++i) {
    const auto& spec = kPoolingRows[i];
    pooling_runs.push_back(run_row("pooling", spec.label, spec.method,
                                   cfg.headline_window_s, cfg.pooling_max_epochs,
                                   Rng::mix(cfg.seed, 10 + i), cfg, train_matches,
                                   val_matches, test_matches, log));
    if (std::string(spec.method) == "netvlad++") headline_index = static_cast<int>(i);
    result.rows.push_back(pooling_runs.back().row);
  }

  // Window sweep: NetVLAD++ at each T; the headline T reuses the pooling run
  // (identical configuration, so retraining would only burn time).
  for (size_t k = 0; k < cfg.window_sweep_s.size(); ++k) {
    const double T = cfg.window_sweep_s[k];
    char label[16];
    std::snprintf(label, sizeof(label), "T=%gs", T);
    if (headline_index >= 0 && std::abs(T - cfg.headline_window_s) < 1e-9) {
      ReplicateRow row = pooling_runs[static_cast<size_t>(headline_index)].row;
      row.section = "window";
      row.label = label;
      row.reused = true;
      result.rows.push_back(row);
      continue;
    }
    result.rows.push_back(run_row("window", label, "netvlad++", T,
                                  cfg.window_max_epochs, Rng::mix(cfg.seed, 50 + k),
                                  cfg, train_matches, val_matches, test_matches, log)
                              .row);
  }

  // Headline artifacts: checkpoint, history, per-match spotting outputs,
  // evaluation report and the two figures.
  if (headline_index < 0) throw ConfigError("pooling rows must include netvlad++");
  RowRun& headline = pooling_runs[static_cast<size_t>(headline_index)];
  result.headline_map = headline.row.map;

  const auto emit = [&](const std::filesystem::path& p) { result.artifacts.push_back(p); };

  const std::filesystem::path ckpt = cfg.out_dir / "headline_model.ckpt";
  headline.train.model.save(ckpt);
  emit(ckpt);
  const std::filesystem::path history = cfg.out_dir / "headline_history.csv";
  write_history_csv(headline.train.history, history);
  emit(history);

  for (size_t m = 0; m < test_matches.size(); ++m) {
    const ConfidenceCurve curve = score_match(headline.train.model, test_matches[m]);
    const std::filesystem::path curve_path =
        cfg.out_dir / ("headline_curve_" + test_matches[m].match_id + ".csv");
    write_curve_csv(curve, curve_path);
    emit(curve_path);
    const std::filesystem::path preds_path =
        cfg.out_dir / ("headline_predictions_" + test_matches[m].match_id + ".csv");
    write_predictions_csv(headline.test_inputs[m].predictions, preds_path);
    emit(preds_path);
    if (m == 0) {
      const std::filesystem::path traces = cfg.out_dir / "confidence_traces.svg";
      write_text(traces, plot_confidence_traces(curve, headline.test_inputs[m].ground_truth,
                                                cfg.nms_window_s, 0.5));
      emit(traces);
    }
  }

  const std::filesystem::path report_path = cfg.out_dir / "headline_report.json";
  write_text(report_path, report_to_json(headline.report));
  emit(report_path);

  const std::filesystem::path pr_path = cfg.out_dir / "pr_curves.svg";
  write_text(pr_path, plot_pr_grid(headline.test_inputs, EvalConfig{}, 30.0));
  emit(pr_path);

  // Machine-readable summary; timings live only in the manifest so this file
  // is byte-stable across reruns.
  nlohmann::ordered_json j;
  j["seed"] = cfg.seed;
  j["fps"] = cfg.fps;
  j["headline_window_s"] = cfg.headline_window_s;
  j["clusters"] = cfg.clusters;
  j["nms_window_s"] = cfg.nms_window_s;
  j["splits"] = {cfg.n_train, cfg.n_val, cfg.n_test};
  j["headline_map"] = result.headline_map;
  j["rows"] = nlohmann::ordered_json::array();
  for (const ReplicateRow& row : result.rows) {
    nlohmann::ordered_json jr;
    jr["section"] = row.section;
    jr["label"] = row.label;
    jr["method"] = row.method;
    jr["window_s"] = row.window_s;
    jr["map"] = row.map;
    jr["ap_per_class"] = row.ap_per_class;
    jr["epochs_run"] = row.epochs_run;
    jr["reused"] = row.reused;
    j["rows"].push_back(std::move(jr));
  }
  const std::filesystem::path results_path = cfg.out_dir / "results.json";
  write_text(results_path, j.dump(2) + "\n");
  emit(results_path);

  const std::filesystem::path table_path = cfg.out_dir / "table.txt";
  write_text(table_path, replicate_table(result));
  emit(table_path);

  if (log) (*log) << "wrote " << result.artifacts.size() << " artifacts under "
                  << cfg.out_dir.string() << "\n";
  return result;
}

std::string replicate_table(const ReplicateResult& result) {
  std::string out;
  char buf[64];

  const auto cell = [&](const std::string& s, size_t width) {
    out += s;
    out += std::string(s.size() < width ? width - s.size() : 1, ' ');
  };

  cell("method", 12);
  cell("Total", 7);
  for (int c = 0; c < kNumEventClasses; ++c)
    cell(std::string(event_class_name(static_cast<EventClass>(c))), 13);
  out += '\n';

  std::string section;
  for (const ReplicateRow& row : result.rows) {
    if (row.section != section) {
      section = row.section;
      out += "-- ";
      out += section;
      out += " --\n";
    }
    cell(row.label, 12);
    std::snprintf(buf, sizeof(buf), "%5.1f", 100.0 * row.map);
    cell(buf, 7);
    for (double ap : row.ap_per_class) {
      std::snprintf(buf, sizeof(buf), "%5.1f", 100.0 * ap);
      cell(buf, 13);
    }
    out += '\n';
  }
  return out;
}

}  // namespace footspot
