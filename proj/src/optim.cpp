#include "sketchret/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace sketchret {

void adamw_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, const AdamWConfig& cfg, double lr, long t) {
  if (t < 1) throw std::invalid_argument("adamw_update: step index starts at 1");
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw std::invalid_argument("adamw_update: size mismatch");
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grads[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const double m_hat = m[i] / bc1;
    const double v_hat = v[i] / bc2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * params[i]);
  }
}

void adamw_step(Model& params, const Model& grads, AdamState& state, const AdamWConfig& cfg, double lr) {
  ++state.t;
  for_each_param(
      [&](const std::string&, auto& p, const auto& g, auto& m, auto& v) {
        const auto n = static_cast<std::size_t>(p.size());
        adamw_update({p.data(), n}, {g.data(), n}, {m.data(), n}, {v.data(), n}, cfg, lr, state.t);
      },
      params, grads, state.m, state.v);
}

double step_lr(double base_lr, int step_size, double gamma, int epoch) {
  if (step_size < 1) throw std::invalid_argument("step_lr: step_size must be at least 1");
  return base_lr * std::pow(gamma, epoch / step_size);
}

}  // namespace sketchret
