#include "skydepth/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace skydepth::optim {

WarmupSchedule WarmupSchedule::for_dataset(std::size_t dataset_length, double base_lr) {
  WarmupSchedule s;
  s.base_lr = base_lr;
  const std::int64_t len = static_cast<std::int64_t>(dataset_length);
  s.warmup_iters = std::max<std::int64_t>(1, std::min<std::int64_t>(1000, len - 1));
  return s;
}

void WarmupSchedule::validate() const {
  if (warmup_iters < 1) throw ValueError("warmup: warmup_iters must be at least 1");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValueError("warmup: gamma must lie in (0, 1)");
  if (!(base_lr > 0.0)) throw ValueError("warmup: base_lr must be positive");
}

double warmup_multiplier(std::int64_t iteration, const WarmupSchedule& sched) {
  if (iteration >= sched.warmup_iters) return 1.0;
  const double alpha = static_cast<double>(iteration) / static_cast<double>(sched.warmup_iters);
  return sched.gamma * (1.0 - alpha) + alpha;
}

AdamState AdamState::zeros_like(std::span<const model::NamedParam<float>> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0f);
    s.v.emplace_back(static_cast<std::size_t>(p.tensor.numel()), 0.0f);
  }
  return s;
}

bool AdamState::matches(std::span<const model::NamedParam<float>> params) const {
  if (m.size() != params.size() || v.size() != params.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto n = static_cast<std::size_t>(params[i].tensor.numel());
    if (m[i].size() != n || v[i].size() != n) return false;
  }
  return true;
}

void adam_step(std::span<const model::NamedParam<float>> params, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (!(lr > 0.0)) throw ValueError("adam_step: learning rate must be positive");
  if (!state.matches(params)) throw ShapeError("adam_step: optimizer state does not match params");

  for (const auto& p : params) {
    for (float g : p.tensor.grad()) {
      if (!std::isfinite(g)) {
        throw NumericError("adam_step: non-finite gradient in parameter '" + p.name + "'");
      }
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    model::NamedParam<float> p = params[i];
    auto w = p.tensor.mutable_data();
    const auto grad = p.tensor.grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      const double g = (grad.empty() ? 0.0 : grad[j]) + cfg.weight_decay * w[j];
      const double mj = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g;
      const double vj = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g * g;
      m[j] = static_cast<float>(mj);
      v[j] = static_cast<float>(vj);
      const double m_hat = mj / bc1;
      const double v_hat = vj / bc2;
      w[j] = static_cast<float>(w[j] - lr * m_hat / (std::sqrt(v_hat) + cfg.eps));
    }
  }
}

double l2_penalty(std::span<const model::NamedParam<float>> params, double weight_decay) {
  double sum = 0.0;
  for (const auto& p : params) {
    for (float v : p.tensor.data()) sum += static_cast<double>(v) * v;
  }
  return 0.5 * weight_decay * sum;
}

}  // namespace skydepth::optim
