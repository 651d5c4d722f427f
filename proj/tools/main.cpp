// footspot: event spotting on 2D tracking data.
//
// Subcommands: generate, train, spot, eval, plot (pr|confidence), replicate.
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric failure. Every
// subcommand writes a run manifest next to its outputs.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "footspot/errors.hpp"
#include "footspot/evaluator.hpp"
#include "footspot/manifest.hpp"
#include "footspot/model.hpp"
#include "footspot/plotting.hpp"
#include "footspot/pooling.hpp"
#include "footspot/replicate.hpp"
#include "footspot/spotter.hpp"
#include "footspot/synthetic.hpp"
#include "footspot/trainer.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using footspot::RunManifest;
using ojson = nlohmann::ordered_json;

namespace {

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ojson read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw footspot::IoError("cannot read " + path.string());
  try {
    return ojson::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw footspot::FormatError(path.string() + ": " + e.what());
  }
}

// Strict config reader: every key must be consumed exactly once.
class ConfigReader {
 public:
  ConfigReader(ojson doc, std::string origin)
      : doc_(std::move(doc)), origin_(std::move(origin)) {
    if (!doc_.is_object())
      throw footspot::FormatError(origin_ + ": config must be a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    used_.push_back(key);
    if (!doc_.contains(key)) return fallback;
    try {
      return doc_.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw footspot::FormatError(origin_ + ": bad value for '" + key + "': " + e.what());
    }
  }

  // Accepts either a single integer applied to all classes or a 12-element
  // array.
  std::array<int, footspot::kNumEventClasses> get_events_per_class(
      std::array<int, footspot::kNumEventClasses> fallback) {
    used_.push_back("events_per_class");
    if (!doc_.contains("events_per_class")) return fallback;
    const auto& v = doc_.at("events_per_class");
    std::array<int, footspot::kNumEventClasses> out{};
    if (v.is_number_integer()) {
      out.fill(v.get<int>());
      return out;
    }
    if (v.is_array() && v.size() == footspot::kNumEventClasses) {
      for (size_t i = 0; i < out.size(); ++i) out[i] = v.at(i).get<int>();
      return out;
    }
    throw footspot::FormatError(origin_ + ": events_per_class must be an int or a " +
                                std::to_string(footspot::kNumEventClasses) +
                                "-element array");
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      (void)value;
      if (std::find(used_.begin(), used_.end(), key) == used_.end())
        throw footspot::FormatError(origin_ + ": unknown config key '" + key + "'");
    }
  }

 private:
  ojson doc_;
  std::string origin_;
  std::vector<std::string> used_;
};

std::vector<fs::path> list_matches(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw footspot::IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

// Ground truth comes either from a match file (.jsonl) or from a
// predictions-format CSV.
std::vector<footspot::SpottedEvent> load_ground_truth(const fs::path& path) {
  if (path.extension() == ".jsonl")
    return footspot::ground_truth_events(footspot::load_match(path));
  return footspot::read_predictions_csv(path);
}

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw footspot::IoError("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw footspot::IoError("short write to " + path.string());
}

// ---------------------------------------------------------------- generate

int cmd_generate(const std::string& config_path, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();

  footspot::GeneratorConfig gen;
  int n_train = 5, n_val = 2, n_test = 2;
  ojson doc = ojson::object();
  if (!config_path.empty()) doc = read_json_file(config_path);
  ConfigReader cfg(doc, config_path.empty() ? "<defaults>" : config_path);
  gen.seed = cfg.get<uint64_t>("seed", gen.seed);
  gen.duration_s = cfg.get<double>("duration_s", gen.duration_s);
  gen.fps = cfg.get<double>("fps", gen.fps);
  gen.events_per_class = cfg.get_events_per_class(gen.events_per_class);
  gen.pitch_length_m = cfg.get<double>("pitch_length_m", gen.pitch_length_m);
  gen.pitch_width_m = cfg.get<double>("pitch_width_m", gen.pitch_width_m);
  gen.ball_coverage_fraction =
      cfg.get<double>("ball_coverage_fraction", gen.ball_coverage_fraction);
  gen.noise_std_m = cfg.get<double>("noise_std_m", gen.noise_std_m);
  n_train = cfg.get<int>("n_train", n_train);
  n_val = cfg.get<int>("n_val", n_val);
  n_test = cfg.get<int>("n_test", n_test);
  cfg.finish();

  ojson snapshot;
  snapshot["seed"] = gen.seed;
  snapshot["duration_s"] = gen.duration_s;
  snapshot["fps"] = gen.fps;
  snapshot["events_per_class"] = gen.events_per_class;
  snapshot["pitch_length_m"] = gen.pitch_length_m;
  snapshot["pitch_width_m"] = gen.pitch_width_m;
  snapshot["ball_coverage_fraction"] = gen.ball_coverage_fraction;
  snapshot["noise_std_m"] = gen.noise_std_m;
  snapshot["n_train"] = n_train;
  snapshot["n_val"] = n_val;
  snapshot["n_test"] = n_test;

  fs::create_directories(out_dir);
  const footspot::DatasetPaths paths =
      footspot::generate_dataset(gen.seed, n_train, n_val, n_test, gen, out_dir);

  RunManifest manifest("generate", snapshot.dump(), gen.seed);
  if (!config_path.empty()) manifest.add_input(config_path);
  int n_files = 0;
  for (const auto* split : {&paths.train, &paths.val, &paths.test})
    for (const auto& p : *split) {
      manifest.add_output(p);
      ++n_files;
    }
  manifest.add_timing("total", elapsed_s(t0));
  manifest.write(fs::path(out_dir) / "manifest.json");

  std::cout << "generated " << n_files << " matches under " << out_dir << "\n";
  return 0;
}

// ------------------------------------------------------------------- train

int cmd_train(const std::string& config_path, const std::string& train_dir,
              const std::string& val_dir, const std::string& out_ckpt) {
  const auto t0 = std::chrono::steady_clock::now();

  footspot::TrainConfig tc;
  ojson doc = ojson::object();
  if (!config_path.empty()) doc = read_json_file(config_path);
  ConfigReader cfg(doc, config_path.empty() ? "<defaults>" : config_path);
  tc.model.method = cfg.get<std::string>("method", tc.model.method);
  tc.model.clusters = cfg.get<int>("clusters", tc.model.clusters);
  tc.model.window_s = cfg.get<double>("window_s", tc.model.window_s);
  tc.model.fps = cfg.get<double>("fps", tc.model.fps);
  tc.stride_s = cfg.get<double>("stride_s", tc.model.window_s);
  tc.lr0 = cfg.get<double>("lr0", tc.lr0);
  tc.plateau_factor = cfg.get<double>("plateau_factor", tc.plateau_factor);
  tc.plateau_patience = cfg.get<int>("plateau_patience", tc.plateau_patience);
  tc.lr_stop = cfg.get<double>("lr_stop", tc.lr_stop);
  tc.batch_size = cfg.get<int>("batch_size", tc.batch_size);
  tc.max_epochs = cfg.get<int>("max_epochs", tc.max_epochs);
  tc.seed = cfg.get<uint64_t>("seed", tc.seed);
  tc.class_weighting = cfg.get<bool>("class_weighting", tc.class_weighting);
  cfg.finish();
  footspot::parse_pool_method(tc.model.method);  // reject bad methods up front

  ojson snapshot;
  snapshot["method"] = tc.model.method;
  snapshot["clusters"] = tc.model.clusters;
  snapshot["window_s"] = tc.model.window_s;
  snapshot["fps"] = tc.model.fps;
  snapshot["stride_s"] = tc.stride_s;
  snapshot["lr0"] = tc.lr0;
  snapshot["plateau_factor"] = tc.plateau_factor;
  snapshot["plateau_patience"] = tc.plateau_patience;
  snapshot["lr_stop"] = tc.lr_stop;
  snapshot["batch_size"] = tc.batch_size;
  snapshot["max_epochs"] = tc.max_epochs;
  snapshot["seed"] = tc.seed;
  snapshot["class_weighting"] = tc.class_weighting;

  RunManifest manifest("train", snapshot.dump(), tc.seed);
  if (!config_path.empty()) manifest.add_input(config_path);

  std::vector<footspot::TrackedMatch> train_matches, val_matches;
  for (const fs::path& p : list_matches(train_dir)) {
    manifest.add_input(p);
    train_matches.push_back(footspot::load_match(p));
  }
  for (const fs::path& p : list_matches(val_dir)) {
    manifest.add_input(p);
    val_matches.push_back(footspot::load_match(p));
  }

  const footspot::TrainResult result =
      footspot::fit(train_matches, val_matches, tc, &std::cerr);

  const fs::path ckpt(out_ckpt);
  if (ckpt.has_parent_path()) fs::create_directories(ckpt.parent_path());
  result.model.save(ckpt);
  fs::path history = ckpt;
  history.replace_extension(".history.csv");
  footspot::write_history_csv(result.history, history);

  manifest.add_output(ckpt);
  manifest.add_output(history);
  manifest.add_timing("total", elapsed_s(t0));
  fs::path manifest_path = ckpt;
  manifest_path.replace_extension(".manifest.json");
  manifest.write(manifest_path);

  std::cout << "trained " << result.epochs_run << " epochs; best val loss "
            << result.best_val_loss << " at epoch " << result.best_epoch << "; wrote "
            << ckpt.string() << "\n";
  return 0;
}

// -------------------------------------------------------------------- spot

int cmd_spot(const std::string& ckpt_path, const std::string& match_path,
             double window_s, double conf_threshold, double nms_window_s,
             const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();

  footspot::SpottingModel model = footspot::SpottingModel::load(ckpt_path);
  if (window_s > 0.0) model.cfg.window_s = window_s;
  const footspot::TrackedMatch match = footspot::load_match(match_path);

  const footspot::ConfidenceCurve curve = footspot::score_match(model, match);
  const std::vector<footspot::SpottedEvent> events =
      footspot::spot_curve(curve, nms_window_s, conf_threshold);

  fs::create_directories(out_dir);
  const fs::path curve_path = fs::path(out_dir) / (match.match_id + "_curve.csv");
  const fs::path preds_path = fs::path(out_dir) / (match.match_id + "_predictions.csv");
  footspot::write_curve_csv(curve, curve_path);
  footspot::write_predictions_csv(events, preds_path);

  ojson snapshot;
  snapshot["checkpoint"] = ckpt_path;
  snapshot["match"] = match_path;
  snapshot["window_s"] = model.cfg.window_s;
  snapshot["conf_threshold"] = conf_threshold;
  snapshot["nms_window_s"] = nms_window_s;

  RunManifest manifest("spot", snapshot.dump(), 0);
  manifest.add_input(ckpt_path);
  manifest.add_input(match_path);
  manifest.add_output(curve_path);
  manifest.add_output(preds_path);
  manifest.add_timing("total", elapsed_s(t0));
  manifest.write(fs::path(out_dir) / (match.match_id + "_spot_manifest.json"));

  std::cout << "spotted " << events.size() << " events; wrote " << preds_path.string()
            << "\n";
  return 0;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const std::vector<std::string>& predictions,
             const std::vector<std::string>& ground_truth, bool include_zero_gt,
             const std::string& report_path) {
  const auto t0 = std::chrono::steady_clock::now();
  if (predictions.size() != ground_truth.size())
    throw footspot::UsageError("need one ground-truth file per predictions file");

  std::vector<footspot::EvalInput> inputs;
  for (size_t i = 0; i < predictions.size(); ++i)
    inputs.push_back({footspot::read_predictions_csv(predictions[i]),
                      load_ground_truth(ground_truth[i])});

  footspot::EvalConfig cfg;
  cfg.include_zero_gt = include_zero_gt;
  const footspot::EvalReport report = footspot::evaluate(inputs, cfg);

  write_text_file(report_path, footspot::report_to_json(report));
  std::cout << footspot::report_to_text(report);

  ojson snapshot;
  snapshot["include_zero_gt"] = include_zero_gt;
  snapshot["deltas_s"] = cfg.deltas_s;
  RunManifest manifest("eval", snapshot.dump(), 0);
  for (const auto& p : predictions) manifest.add_input(p);
  for (const auto& p : ground_truth) manifest.add_input(p);
  manifest.add_output(report_path);
  manifest.add_timing("total", elapsed_s(t0));
  fs::path manifest_path(report_path);
  manifest_path.replace_extension(".manifest.json");
  manifest.write(manifest_path);
  return 0;
}

// -------------------------------------------------------------------- plot

int cmd_plot_pr(const std::vector<std::string>& predictions,
                const std::vector<std::string>& ground_truth, double delta_s,
                const std::string& out_path) {
  const auto t0 = std::chrono::steady_clock::now();
  if (predictions.size() != ground_truth.size())
    throw footspot::UsageError("need one ground-truth file per predictions file");

  std::vector<footspot::EvalInput> inputs;
  for (size_t i = 0; i < predictions.size(); ++i)
    inputs.push_back({footspot::read_predictions_csv(predictions[i]),
                      load_ground_truth(ground_truth[i])});

  write_text_file(out_path, footspot::plot_pr_grid(inputs, footspot::EvalConfig{}, delta_s));

  ojson snapshot;
  snapshot["delta_s"] = delta_s;
  RunManifest manifest("plot-pr", snapshot.dump(), 0);
  for (const auto& p : predictions) manifest.add_input(p);
  for (const auto& p : ground_truth) manifest.add_input(p);
  manifest.add_output(out_path);
  manifest.add_timing("total", elapsed_s(t0));
  fs::path manifest_path(out_path);
  manifest_path.replace_extension(".manifest.json");
  manifest.write(manifest_path);

  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_plot_confidence(const std::string& curve_path, const std::string& events_path,
                        double nms_window_s, double conf_threshold,
                        const std::string& out_path) {
  const auto t0 = std::chrono::steady_clock::now();

  const footspot::ConfidenceCurve curve = footspot::read_curve_csv(curve_path);
  const std::vector<footspot::SpottedEvent> gt = load_ground_truth(events_path);
  write_text_file(out_path,
                  footspot::plot_confidence_traces(curve, gt, nms_window_s, conf_threshold));

  ojson snapshot;
  snapshot["nms_window_s"] = nms_window_s;
  snapshot["conf_threshold"] = conf_threshold;
  RunManifest manifest("plot-confidence", snapshot.dump(), 0);
  manifest.add_input(curve_path);
  manifest.add_input(events_path);
  manifest.add_output(out_path);
  manifest.add_timing("total", elapsed_s(t0));
  fs::path manifest_path(out_path);
  manifest_path.replace_extension(".manifest.json");
  manifest.write(manifest_path);

  std::cout << "wrote " << out_path << "\n";
  return 0;
}

// --------------------------------------------------------------- replicate

int cmd_replicate(const std::string& config_path, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();

  footspot::ReplicateConfig rc;
  rc.out_dir = out_dir;
  ojson doc = ojson::object();
  if (!config_path.empty()) doc = read_json_file(config_path);
  ConfigReader cfg(doc, config_path.empty() ? "<defaults>" : config_path);
  rc.seed = cfg.get<uint64_t>("seed", rc.seed);
  rc.generator.duration_s = cfg.get<double>("duration_s", rc.generator.duration_s);
  rc.generator.fps = cfg.get<double>("generator_fps", rc.generator.fps);
  rc.generator.events_per_class =
      cfg.get_events_per_class(rc.generator.events_per_class);
  rc.generator.noise_std_m = cfg.get<double>("noise_std_m", rc.generator.noise_std_m);
  rc.n_train = cfg.get<int>("n_train", rc.n_train);
  rc.n_val = cfg.get<int>("n_val", rc.n_val);
  rc.n_test = cfg.get<int>("n_test", rc.n_test);
  rc.fps = cfg.get<double>("fps", rc.fps);
  rc.headline_window_s = cfg.get<double>("headline_window_s", rc.headline_window_s);
  rc.clusters = cfg.get<int>("clusters", rc.clusters);
  rc.nms_window_s = cfg.get<double>("nms_window_s", rc.nms_window_s);
  rc.pooling_max_epochs = cfg.get<int>("pooling_max_epochs", rc.pooling_max_epochs);
  rc.window_max_epochs = cfg.get<int>("window_max_epochs", rc.window_max_epochs);
  rc.window_sweep_s = cfg.get<std::vector<double>>("window_sweep_s", rc.window_sweep_s);
  cfg.finish();

  ojson snapshot;
  snapshot["seed"] = rc.seed;
  snapshot["duration_s"] = rc.generator.duration_s;
  snapshot["generator_fps"] = rc.generator.fps;
  snapshot["events_per_class"] = rc.generator.events_per_class;
  snapshot["noise_std_m"] = rc.generator.noise_std_m;
  snapshot["n_train"] = rc.n_train;
  snapshot["n_val"] = rc.n_val;
  snapshot["n_test"] = rc.n_test;
  snapshot["fps"] = rc.fps;
  snapshot["headline_window_s"] = rc.headline_window_s;
  snapshot["clusters"] = rc.clusters;
  snapshot["nms_window_s"] = rc.nms_window_s;
  snapshot["pooling_max_epochs"] = rc.pooling_max_epochs;
  snapshot["window_max_epochs"] = rc.window_max_epochs;
  snapshot["window_sweep_s"] = rc.window_sweep_s;

  const footspot::ReplicateResult result = footspot::run_replicate(rc, &std::cerr);

  RunManifest manifest("replicate", snapshot.dump(), rc.seed);
  if (!config_path.empty()) manifest.add_input(config_path);
  for (const auto& p : result.artifacts) manifest.add_output(p);
  manifest.add_timing("total", elapsed_s(t0));
  manifest.write(rc.out_dir / "manifest.json");

  std::cout << footspot::replicate_table(result);
  std::cout << "headline mAP: " << result.headline_map << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"footspot: spot football events from 2D tracking data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "footspot 0.1.0");

  std::string config_path, out_dir = "dataset_out";
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->add_option("--config", config_path, "generator config JSON");
  generate->add_option("--out", out_dir, "output directory");

  std::string train_cfg, train_dir, val_dir, out_ckpt = "model.ckpt";
  auto* train = app.add_subcommand("train", "train a spotting model");
  train->add_option("--config", train_cfg, "training config JSON");
  train->add_option("--train-dir", train_dir, "directory of training matches")
      ->required();
  train->add_option("--val-dir", val_dir, "directory of validation matches")
      ->required();
  train->add_option("--out", out_ckpt, "output checkpoint path");

  std::string ckpt_path, match_path, spot_out = ".";
  double window_s = 0.0, conf_threshold = 0.0, nms_window_s = 30.0;
  auto* spot = app.add_subcommand("spot", "score one match and spot events");
  spot->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  spot->add_option("--match", match_path, "match JSON-lines file")->required();
  spot->add_option("--window-s", window_s, "override the checkpoint window length");
  spot->add_option("--conf-threshold", conf_threshold,
                   "drop predictions below this confidence (default 0)");
  spot->add_option("--nms-window-s", nms_window_s, "suppression window (default 30)");
  spot->add_option("--out", spot_out, "output directory");

  std::vector<std::string> pred_files, gt_files;
  bool include_zero_gt = false;
  std::string report_path = "report.json";
  auto* eval = app.add_subcommand("eval", "tolerance-swept mAP of predictions");
  eval->add_option("--predictions", pred_files, "predictions CSV(s)")->required();
  eval->add_option("--ground-truth", gt_files,
                   "ground-truth file(s): match .jsonl or predictions-format .csv")
      ->required();
  eval->add_flag("--include-zero-gt-classes", include_zero_gt,
                 "count classes without ground truth (as AP 0)");
  eval->add_option("--report-out", report_path, "report JSON path");

  auto* plot = app.add_subcommand("plot", "render SVG figures");
  plot->require_subcommand(1);
  std::vector<std::string> pr_preds, pr_gts;
  double pr_delta = 30.0;
  std::string pr_out = "pr_curves.svg";
  auto* plot_pr = plot->add_subcommand("pr", "per-class precision/recall panels");
  plot_pr->add_option("--predictions", pr_preds, "predictions CSV(s)")->required();
  plot_pr->add_option("--ground-truth", pr_gts, "ground-truth file(s)")->required();
  plot_pr->add_option("--delta", pr_delta, "matching tolerance in seconds");
  plot_pr->add_option("--out", pr_out, "output SVG path");

  std::string conf_curve, conf_events, conf_out = "confidence_traces.svg";
  double plot_nms = 30.0, plot_threshold = 0.5;
  auto* plot_conf =
      plot->add_subcommand("confidence", "raw / NMS / thresholded traces per class");
  plot_conf->add_option("--curve", conf_curve, "confidence curve CSV")->required();
  plot_conf->add_option("--events", conf_events, "ground-truth file")->required();
  plot_conf->add_option("--nms-window-s", plot_nms, "suppression window");
  plot_conf->add_option("--conf-threshold", plot_threshold, "threshold column cutoff");
  plot_conf->add_option("--out", conf_out, "output SVG path");

  std::string repl_cfg, repl_out = "replicate_out";
  auto* replicate =
      app.add_subcommand("replicate", "pooling/window comparison on synthetic data");
  replicate->add_option("--config", repl_cfg, "replicate config JSON");
  replicate->add_option("--out", repl_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*generate) return cmd_generate(config_path, out_dir);
    if (*train) return cmd_train(train_cfg, train_dir, val_dir, out_ckpt);
    if (*spot)
      return cmd_spot(ckpt_path, match_path, window_s, conf_threshold, nms_window_s,
                      spot_out);
    if (*eval) return cmd_eval(pred_files, gt_files, include_zero_gt, report_path);
    if (*plot_pr) return cmd_plot_pr(pr_preds, pr_gts, pr_delta, pr_out);
    if (*plot_conf)
      return cmd_plot_confidence(conf_curve, conf_events, plot_nms, plot_threshold,
                                 conf_out);
    if (*replicate) return cmd_replicate(repl_cfg, repl_out);
  } catch (const footspot::UsageError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const footspot::NumericError& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const footspot::DataError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
