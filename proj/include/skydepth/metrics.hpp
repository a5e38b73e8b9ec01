#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "skydepth/types.hpp"

namespace skydepth::metrics {

inline constexpr float kMinClass = 0.0f;
inline constexpr float kMaxClass = 4.0f;

enum class Aggregator { mean, min, max };

inline constexpr std::array<Aggregator, 3> kAggregators{Aggregator::mean, Aggregator::min,
                                                        Aggregator::max};

std::string_view aggregator_name(Aggregator agg);

struct SlidingWindowCfg {
  int k = 5;
  int stride = 1;
  Aggregator aggregator = Aggregator::mean;

  void validate() const;
};

/// Predictions are clamped to [0, 4] before comparison.
double mae(const DepthMask& pred, const DepthMask& gt);
double rmse(const DepthMask& pred, const DepthMask& gt);

/// Mean of the k x k window whose top-left corner sits on each bbox pixel
/// (stepping by cfg.stride), in row-major order of the corners. Windows that
/// overhang the mask read reflected values. The bbox must lie inside the
/// mask and be non-empty.
std::vector<double> kernel_means(const DepthMask& mask, const BBox& bbox,
                                 const SlidingWindowCfg& cfg);

/// mean / min / max of the kernel means, before rounding.
double aggregate(std::span<const double> values, Aggregator agg);

/// Aggregate of the kernel means, rounded half away from zero and clamped
/// to [0, 4]. The mask is clamped to [0, 4] first.
int sliding_window_class(const DepthMask& mask, const BBox& bbox, const SlidingWindowCfg& cfg);

/// Fraction of pixels with max(p'/g', g'/p') < threshold, where
/// p' = clamp(p, 0, 4) + 1 and g' = g + 1.
double threshold_accuracy(const DepthMask& pred, const DepthMask& gt, double threshold = 1.25);

struct EvalSample {
  DepthMask prediction;
  AnnotatedFrame frame;  // bbox in the prediction's coordinates
  int gt_class = 0;
  DepthMask gt_mask;     // unsmoothed class mask
};

struct EvalConfig {
  int window = 5;
  double threshold = 1.25;
};

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double sw_acc_mean = 0.0;
  double sw_acc_min = 0.0;
  double sw_acc_max = 0.0;
  double threshold_acc = 0.0;
  int n_samples = 0;

  bool operator==(const MetricReport&) const = default;
};

/// Pixel metrics are pooled over every pixel of every sample; sliding-window
/// accuracies are the fraction of samples whose class matches gt_class.
MetricReport evaluate(std::span<const EvalSample> samples, const EvalConfig& cfg = {});

}  // namespace skydepth::metrics
