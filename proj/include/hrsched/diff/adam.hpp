#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "hrsched/diff/tape.hpp"

namespace hrsched::diff {

struct AdamConfig {
  double lr = 2e-3;
  double weight_decay = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr_decay = 0.5;     // multiplicative factor ...
  int lr_decay_every = 4000;  // ... applied every this many epochs
};

/// Learning rate in effect at `epoch` under the step decay schedule.
inline double scheduled_lr(const AdamConfig& cfg, int epoch) {
  if (cfg.lr_decay_every <= 0) return cfg.lr;
  return cfg.lr * std::pow(cfg.lr_decay, epoch / cfg.lr_decay_every);
}

/// First and second moment estimates, one pair per parameter.
struct AdamState {
  long step = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  bool operator==(const AdamState&) const = default;
};

inline AdamState make_adam_state(std::span<const Parameter> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.shape());
    s.v.emplace_back(p.value.shape());
  }
  return s;
}

/// One Adam update with decoupled weight decay:
///   p -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// using each parameter's accumulated gradient.
inline void adam_step(std::span<Parameter> params, AdamState& state, const AdamConfig& cfg, double lr) {
  if (state.m.size() != params.size() || state.v.size() != params.size())
    throw std::invalid_argument("adam_step: optimizer state does not match parameter list");
  ++state.step;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    if (m.shape() != p.value.shape()) throw std::invalid_argument("adam_step: moment shape mismatch for " + p.name);
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g;
      v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p.value[k] -= lr * (mhat / (std::sqrt(vhat) + cfg.eps) + cfg.weight_decay * p.value[k]);
    }
  }
}

inline double gradient_norm(std::span<const Parameter> params) {
  double s = 0.0;
  for (const auto& p : params)
    for (double g : p.grad.values()) s += g * g;
  return std::sqrt(s);
}

/// Rescales all gradients together so their joint norm is at most
/// `max_norm`. Returns the norm before clipping.
inline double clip_grad_norm(std::span<Parameter> params, double max_norm) {
  const double norm = gradient_norm(params);
  if (max_norm > 0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& p : params)
      for (std::size_t i = 0; i < p.grad.size(); ++i) p.grad[i] *= k;
  }
  return norm;
}

inline void zero_grads(std::span<Parameter> params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace hrsched::diff
