#pragma once

#include "sketchret/embedder.hpp"

#include <span>

namespace sketchret {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One decoupled-weight-decay Adam update at step t >= 1 with learning rate `lr`:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   theta <- theta - lr (m_hat / (sqrt(v_hat) + eps) + wd theta)
void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, const AdamWConfig& cfg, double lr, long t);

struct AdamState {
  Model m;
  Model v;
  long t = 0;

  explicit AdamState(const Model& shape) : m(zero_gradients(shape)), v(zero_gradients(shape)) {}
};

/// Applies one update to every parameter tensor and advances `state.t`.
void adamw_step(Model& params, const Model& grads, AdamState& state, const AdamWConfig& cfg, double lr);

/// base_lr * gamma^floor(epoch / step_size).
double step_lr(double base_lr, int step_size, double gamma, int epoch);

}  // namespace sketchret
