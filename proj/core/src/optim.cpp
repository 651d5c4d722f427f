#include "footspot/optim.hpp"

#include <cmath>
#include <string>

#include "footspot/errors.hpp"

namespace footspot {

Adam::Adam(std::vector<Tensor> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Tensor& p : params_) {
    m_.emplace_back(static_cast<size_t>(p.size()), 0.0);
    v_.emplace_back(static_cast<size_t>(p.size()), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = params_[pi];
    if (!p.has_grad()) {
      throw MissingGrad("parameter " + std::to_string(pi) +
                        " has no gradient; run backward before step()");
    }
    const std::vector<double>& g = p.grad();
    std::vector<double>& vals = p.values();
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    for (size_t i = 0; i < vals.size(); ++i) {
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      vals[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Tensor& p : params_) {
    p.zero_grad();
  }
}

std::pair<double, bool> PlateauScheduler::step(double val_metric) {
  if (!std::isfinite(val_metric)) {
    throw NonFinite("plateau scheduler fed metric " + std::to_string(val_metric));
  }
  if (!has_best || val_metric < best) {
    best = val_metric;
    has_best = true;
    epochs_since_improvement = 0;
  } else {
    ++epochs_since_improvement;
    if (epochs_since_improvement >= patience) {
      lr *= factor;
      epochs_since_improvement = 0;
    }
  }
  return {lr, lr < min_lr_stop};
}

}  // namespace footspot
