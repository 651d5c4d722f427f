#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "footspot/tensor.hpp"

namespace footspot {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Holds first/second moment buffers per parameter;
// step() consumes whatever gradients have been accumulated on the parameters.
class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, AdamConfig cfg = {});

  // One update. Throws MissingGrad if a parameter has no gradient buffer.
  void step();
  void zero_grad();

  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  int64_t step_count() const { return t_; }

  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

// Reduce-on-plateau learning-rate schedule: when the validation metric has
// not improved (strict <) for `patience` consecutive steps, multiply the lr
// by `factor` and reset the counter. step() returns {new_lr, stop} where
// stop becomes true once lr drops below min_lr_stop.
struct PlateauScheduler {
  double lr = 1e-3;
  double factor = 0.1;
  int patience = 10;
  double min_lr_stop = 1e-8;

  double best = 0.0;
  bool has_best = false;
  int epochs_since_improvement = 0;

  // Throws NonFinite on a NaN/inf metric.
  std::pair<double, bool> step(double val_metric);
};

}  // namespace footspot
