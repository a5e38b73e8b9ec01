#include "skydepth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skydepth/kernels/conv2d.hpp"

namespace skydepth::metrics {

namespace {

void require_same_extent(const char* what, const DepthMask& a, const DepthMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw ShapeError(std::string(what) + ": prediction " + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " and ground truth " +
                     std::to_string(b.height()) + "x" + std::to_string(b.width()) + " differ");
  }
}

float clamp_class(float v) { return std::clamp(v, kMinClass, kMaxClass); }

struct PixelSums {
  double abs_err = 0.0;
  double sq_err = 0.0;
  std::size_t correct = 0;
};

PixelSums pixel_sums(const DepthMask& pred, const DepthMask& gt, double threshold) {
  PixelSums s;
  const auto& p = pred.data();
  const auto& g = gt.data();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double pc = clamp_class(p[i]);
    const double d = pc - g[i];
    s.abs_err += std::abs(d);
    s.sq_err += d * d;
    const double ps = pc + 1.0;
    const double gs = static_cast<double>(g[i]) + 1.0;
    if (std::max(ps / gs, gs / ps) < threshold) ++s.correct;
  }
  return s;
}

}  // namespace

std::string_view aggregator_name(Aggregator agg) {
  switch (agg) {
    case Aggregator::mean: return "mean";
    case Aggregator::min: return "min";
    case Aggregator::max: return "max";
  }
  return "unknown";
}

void SlidingWindowCfg::validate() const {
  if (k <= 0 || k % 2 == 0) {
    throw ValueError("sliding window: k must be odd and positive, got " + std::to_string(k));
  }
  if (stride < 1) throw ValueError("sliding window: stride must be at least 1");
}

double mae(const DepthMask& pred, const DepthMask& gt) {
  require_same_extent("mae", pred, gt);
  return pixel_sums(pred, gt, 1.0).abs_err / static_cast<double>(pred.size());
}

double rmse(const DepthMask& pred, const DepthMask& gt) {
  require_same_extent("rmse", pred, gt);
  return std::sqrt(pixel_sums(pred, gt, 1.0).sq_err / static_cast<double>(pred.size()));
}

std::vector<double> kernel_means(const DepthMask& mask, const BBox& bbox,
                                 const SlidingWindowCfg& cfg) {
  cfg.validate();
  if (bbox.w <= 0 || bbox.h <= 0) throw ValueError("kernel_means: empty bbox");
  if (bbox.x < 0 || bbox.y < 0 || bbox.right() > mask.width() || bbox.bottom() > mask.height()) {
    throw ValueError("kernel_means: bbox (" + std::to_string(bbox.x) + "," +
                     std::to_string(bbox.y) + "," + std::to_string(bbox.w) + "," +
                     std::to_string(bbox.h) + ") is not inside the " +
                     std::to_string(mask.width()) + "x" + std::to_string(mask.height()) + " mask");
  }
  const int k = cfg.k;
  const int nx = (bbox.w + cfg.stride - 1) / cfg.stride;
  const int ny = (bbox.h + cfg.stride - 1) / cfg.stride;
  std::vector<double> out(static_cast<std::size_t>(nx) * ny);
  const double area = static_cast<double>(k) * k;

#pragma omp parallel for schedule(static) if (nx * ny > 4096)
  for (int j = 0; j < ny; ++j) {
    const int y0 = bbox.y + j * cfg.stride;
    for (int i = 0; i < nx; ++i) {
      const int x0 = bbox.x + i * cfg.stride;
      double acc = 0.0;
      for (int dy = 0; dy < k; ++dy) {
        const auto y = static_cast<int>(kernels::reflect_index(y0 + dy, mask.height()));
        for (int dx = 0; dx < k; ++dx) {
          const auto x = static_cast<int>(kernels::reflect_index(x0 + dx, mask.width()));
          acc += clamp_class(mask.at(y, x));
        }
      }
      out[static_cast<std::size_t>(j) * nx + i] = acc / area;
    }
  }
  return out;
}

double aggregate(std::span<const double> values, Aggregator agg) {
  if (values.empty()) throw ValueError("aggregate: no kernel means");
  switch (agg) {
    case Aggregator::mean: {
      double s = 0.0;
      for (double v : values) s += v;
      return s / static_cast<double>(values.size());
    }
    case Aggregator::min: return *std::min_element(values.begin(), values.end());
    case Aggregator::max: return *std::max_element(values.begin(), values.end());
  }
  throw ValueError("aggregate: unknown aggregator");
}

int sliding_window_class(const DepthMask& mask, const BBox& bbox, const SlidingWindowCfg& cfg) {
  const auto means = kernel_means(mask, bbox, cfg);
  const double v = std::round(aggregate(means, cfg.aggregator));
  return static_cast<int>(std::clamp(v, static_cast<double>(kMinClass),
                                     static_cast<double>(kMaxClass)));
}

double threshold_accuracy(const DepthMask& pred, const DepthMask& gt, double threshold) {
  require_same_extent("threshold_accuracy", pred, gt);
  if (!(threshold > 1.0)) throw ValueError("threshold_accuracy: threshold must exceed 1");
  return static_cast<double>(pixel_sums(pred, gt, threshold).correct) /
         static_cast<double>(pred.size());
}

MetricReport evaluate(std::span<const EvalSample> samples, const EvalConfig& cfg) {
  if (samples.empty()) throw ValueError("evaluate: no samples");
  if (!(cfg.threshold > 1.0)) throw ValueError("evaluate: threshold must exceed 1");
  double abs_err = 0.0, sq_err = 0.0;
  std::size_t correct = 0, pixels = 0;
  std::array<std::size_t, 3> hits{};

  for (const auto& s : samples) {
    require_same_extent("evaluate", s.prediction, s.gt_mask);
    const PixelSums ps = pixel_sums(s.prediction, s.gt_mask, cfg.threshold);
    abs_err += ps.abs_err;
    sq_err += ps.sq_err;
    correct += ps.correct;
    pixels += s.prediction.size();

    const auto means =
        kernel_means(s.prediction, s.frame.bbox, SlidingWindowCfg{cfg.window, 1, Aggregator::mean});
    for (std::size_t a = 0; a < kAggregators.size(); ++a) {
      const double v = std::clamp(std::round(aggregate(means, kAggregators[a])),
                                  static_cast<double>(kMinClass), static_cast<double>(kMaxClass));
      if (static_cast<int>(v) == s.gt_class) ++hits[a];
    }
  }

  const double n = static_cast<double>(samples.size());
  MetricReport r;
  r.mae = abs_err / static_cast<double>(pixels);
  r.rmse = std::sqrt(sq_err / static_cast<double>(pixels));
  r.sw_acc_mean = static_cast<double>(hits[0]) / n;
  r.sw_acc_min = static_cast<double>(hits[1]) / n;
  r.sw_acc_max = static_cast<double>(hits[2]) / n;
  r.threshold_acc = static_cast<double>(correct) / static_cast<double>(pixels);
  r.n_samples = static_cast<int>(samples.size());
  return r;
}

}  // namespace skydepth::metrics
