#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skydepth/model.hpp"

namespace skydepth::optim {

/// Linear warmup from gamma * base_lr to base_lr over warmup_iters steps,
/// constant afterwards.
struct WarmupSchedule {
  double base_lr = 1e-3;
  double gamma = 0.001;
  std::int64_t warmup_iters = 1000;

  /// warmup_iters = min(1000, dataset_length - 1), floored at 1.
  static WarmupSchedule for_dataset(std::size_t dataset_length, double base_lr = 1e-3);
  void validate() const;
};

/// 1 for x >= warmup_iters, else gamma * (1 - a) + a with a = x / warmup_iters.
double warmup_multiplier(std::int64_t iteration, const WarmupSchedule& sched);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0005;  // coupled: added to the gradient as wd * param
};

struct AdamState {
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
  std::int64_t step = 0;

  static AdamState zeros_like(std::span<const model::NamedParam<float>> params);
  bool matches(std::span<const model::NamedParam<float>> params) const;
};

/// One Adam update with bias correction, reading gradients from the
/// parameters' gradient buffers (a missing buffer counts as zero).
///
/// All gradients are checked before anything is touched; a non-finite
/// gradient throws NumericError naming the parameter and leaves params and
/// state unchanged.
void adam_step(std::span<const model::NamedParam<float>> params, AdamState& state, double lr,
               const AdamConfig& cfg = {});

/// 0.5 * weight_decay * sum(p^2): the loss-side penalty whose gradient the
/// coupled decay adds. Reported for logging only.
double l2_penalty(std::span<const model::NamedParam<float>> params, double weight_decay);

}  // namespace skydepth::optim
