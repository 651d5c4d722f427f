#include "footspot/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "footspot/encoder.hpp"
#include "footspot/errors.hpp"
#include "footspot/graph.hpp"
#include "footspot/optim.hpp"
#include "footspot/rng.hpp"

namespace footspot {
namespace {

// Chunks keep pointers into their source matches, so the resampled copies
// must stay alive alongside them.
std::vector<WindowChunk> chunk_split(const std::vector<TrackedMatch>& matches,
                                     std::vector<TrackedMatch>& storage,
                                     const TrainConfig& cfg) {
  std::vector<WindowChunk> chunks;
  storage.reserve(matches.size());
  for (const TrackedMatch& m : matches) {
    storage.push_back(resample(m, cfg.model.fps));
    auto part = make_training_chunks(storage.back(), cfg.model.window_s, cfg.stride_s);
    chunks.insert(chunks.end(), std::make_move_iterator(part.begin()),
                  std::make_move_iterator(part.end()));
  }
  return chunks;
}

// Deterministic re-estimate of the batch-norm running statistics: an exact
// average of per-frame batch statistics over an evenly spaced subset of the
// training grid. Without this, eval-mode behavior would depend on whichever
// shuffled batch happened to run last in the epoch.
void calibrate_running_stats(SpottingModel& model,
                             const std::vector<WindowChunk>& chunks) {
  constexpr size_t kTargetChunks = 48;
  const size_t step = std::max<size_t>(1, chunks.size() / kTargetChunks);
  const double saved1 = model.encoder.bn1.momentum;
  const double saved2 = model.encoder.bn2.momentum;
  int64_t seen = 0;
  for (size_t ci = 0; ci < chunks.size(); ci += step) {
    const WindowChunk& chunk = chunks[ci];
    for (const TrackedFrame* frame : chunk.frames) {
      const FrameGraph graph =
          build_graph(*frame, chunk.pitch_length_m, chunk.pitch_width_m);
      if (graph.n_nodes == 0) continue;
      // Momentum 1/k turns the EMA update into a cumulative mean.
      ++seen;
      const double m = 1.0 / static_cast<double>(seen);
      model.encoder.bn1.momentum = m;
      model.encoder.bn2.momentum = m;
      encode_frame(graph, model.encoder, Mode::Train);
    }
  }
  model.encoder.bn1.momentum = saved1;
  model.encoder.bn2.momentum = saved2;
}

double mean_loss(SpottingModel& model, const std::vector<WindowChunk>& chunks,
                 const std::array<double, kNumEventClasses>* pos_weight) {
  double total = 0.0;
  for (const WindowChunk& chunk : chunks) {
    const Tensor probs = model.forward_chunk(chunk, Mode::Eval);
    total += bce_loss(probs, chunk.label, pos_weight).item();
  }
  return total / static_cast<double>(chunks.size());
}

}  // namespace

TrainResult fit(const std::vector<TrackedMatch>& train_matches,
                const std::vector<TrackedMatch>& val_matches, const TrainConfig& cfg,
                std::ostream* log) {
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be at least 1");

  std::vector<TrackedMatch> train_storage, val_storage;
  std::vector<WindowChunk> train_chunks = chunk_split(train_matches, train_storage, cfg);
  std::vector<WindowChunk> val_chunks = chunk_split(val_matches, val_storage, cfg);
  if (train_chunks.empty()) throw EmptyDataset("no training chunks");
  if (val_chunks.empty()) throw EmptyDataset("no validation chunks");

  std::array<double, kNumEventClasses> pos_weight;
  pos_weight.fill(1.0);
  if (cfg.class_weighting) {
    std::array<int64_t, kNumEventClasses> positives{};
    for (const WindowChunk& chunk : train_chunks)
      for (size_t c = 0; c < kNumEventClasses; ++c) positives[c] += chunk.label[c];
    const auto total = static_cast<int64_t>(train_chunks.size());
    for (size_t c = 0; c < kNumEventClasses; ++c) {
      if (positives[c] == 0) continue;  // nothing to balance against
      const double ratio = static_cast<double>(total - positives[c]) /
                           static_cast<double>(positives[c]);
      pos_weight[c] = std::clamp(ratio, 1.0, 100.0);
    }
  }
  const auto* pw = cfg.class_weighting ? &pos_weight : nullptr;

  SpottingModel model = SpottingModel::init(cfg.model, cfg.seed);
  std::vector<Tensor> params;
  for (auto& [name, t] : model.named_parameters()) params.push_back(t);
  Adam opt(params, {cfg.lr0, 0.9, 0.999, 1e-8});
  PlateauScheduler schedule{cfg.lr0, cfg.plateau_factor, cfg.plateau_patience,
                            cfg.lr_stop};

  Rng shuffle_rng(Rng::mix(cfg.seed, 0xf17));
  std::vector<size_t> order(train_chunks.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result{model.clone(), {}, 0.0, 0, 0};
  bool have_best = false;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    // Gradient forwards run the deployed eval-mode function, so the batch
    // normalization running statistics must match the current weights before
    // each epoch's batches (and again before validation).
    calibrate_running_stats(model, train_chunks);

    double train_total = 0.0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      const size_t batch_n = stop - start;
      const double inv_batch = 1.0 / static_cast<double>(batch_n);

      // Each chunk's gradient is computed on a detached model copy in a
      // worker thread, then accumulated in chunk order, so the sums are
      // independent of scheduling and of the thread count.
      std::vector<std::vector<std::vector<double>>> chunk_grads(batch_n);
      std::vector<double> chunk_losses(batch_n, 0.0);
      std::atomic<size_t> cursor{0};
      std::exception_ptr failure;
      std::mutex failure_mutex;
      auto work = [&]() {
        try {
          for (size_t j; (j = cursor.fetch_add(1)) < batch_n;) {
            SpottingModel local = model.clone();
            std::vector<Tensor> local_params;
            for (auto& [name, t] : local.named_parameters()) local_params.push_back(t);
            const WindowChunk& chunk = train_chunks[order[start + j]];
            GradientTape tape;
            const Tensor probs = local.forward_chunk(chunk, Mode::Eval);
            const Tensor loss = bce_loss(probs, chunk.label, pw);
            chunk_losses[j] = loss.item();
            tape.backward(scale(loss, inv_batch));
            chunk_grads[j].reserve(local_params.size());
            for (Tensor& p : local_params)
              chunk_grads[j].push_back(
                  p.has_grad() ? p.grad()
                               : std::vector<double>(static_cast<size_t>(p.size()), 0.0));
          }
        } catch (...) {
          std::lock_guard<std::mutex> hold(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      };
      const auto n_workers = static_cast<unsigned>(std::min<size_t>(
          std::max(1u, std::thread::hardware_concurrency()), batch_n));
      if (n_workers <= 1) {
        work();
      } else {
        std::vector<std::thread> workers;
        workers.reserve(n_workers);
        for (unsigned w = 0; w < n_workers; ++w) workers.emplace_back(work);
        for (std::thread& t : workers) t.join();
      }
      if (failure) std::rethrow_exception(failure);

      opt.zero_grad();
      for (size_t j = 0; j < batch_n; ++j) {
        train_total += chunk_losses[j];
        for (size_t p = 0; p < params.size(); ++p) {
          std::vector<double>& sum = params[p].grad();
          const std::vector<double>& add = chunk_grads[j][p];
          for (size_t k = 0; k < sum.size(); ++k) sum[k] += add[k];
        }
      }
      opt.step();
    }
    const double train_loss = train_total / static_cast<double>(train_chunks.size());
    calibrate_running_stats(model, train_chunks);
    const double val_loss = mean_loss(model, val_chunks, pw);

    if (!have_best || val_loss < result.best_val_loss) {
      result.model = model.clone();
      result.best_val_loss = val_loss;
      result.best_epoch = epoch;
      have_best = true;
    }

    const auto [lr, stop_now] = schedule.step(val_loss);
    opt.set_lr(lr);
    result.history.push_back({epoch, train_loss, val_loss, lr});
    result.epochs_run = epoch;
    if (log)
      (*log) << "epoch " << epoch << " train " << train_loss << " val " << val_loss
             << " lr " << lr << "\n";
    if (stop_now) break;
  }
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "epoch,train_loss,val_loss,lr\n";
  out.precision(12);
  for (const EpochStats& row : history)
    out << row.epoch << ',' << row.train_loss << ',' << row.val_loss << ',' << row.lr
        << '\n';
  if (!out.flush()) throw IoError("short write to " + path.string());
}

}  // namespace footspot
