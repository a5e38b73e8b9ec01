#pragma once

#include "skydepth/numcore/tensor.hpp"

namespace skydepth::losses {

using numcore::BasicTensor;

struct LossWeights {
  double edge = 1.0;
  double ssim = 1.0;
  double l1 = 1.0;
  double berhu = 1.0;

  void validate() const;
};

struct SsimConfig {
  int window = 7;
  double dynamic_range = 4.0;
  double c1 = (0.01 * 4.0) * (0.01 * 4.0);
  double c2 = (0.03 * 4.0) * (0.03 * 4.0);

  static SsimConfig for_range(double dynamic_range, int window = 7);
  void validate() const;
};

// All losses take N x 1 x H x W predictions and targets and return a rank-0
// tensor recorded on the active graph when an input requires grad.

/// mean |pred - target|
template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target);

/// Reverse Huber with c = c_frac * max|pred - target|: |e| where |e| <= c,
/// (e^2 + c^2) / 2c elsewhere, averaged. Zero when pred == target.
template <typename T>
BasicTensor<T> berhu_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                          double c_frac = 0.2);

/// Image-aware smoothness penalty on forward differences of the prediction:
///   exp(-mean|dx I|) * mean|dx Y| + exp(-mean|dy I|) * mean|dy Y|
/// with the image averaged over channels first. `image` is N x C x H x W.
template <typename T>
BasicTensor<T> edge_loss(const BasicTensor<T>& pred, const BasicTensor<T>& image);

/// 1 - mean SSIM over all valid (unpadded) box windows.
template <typename T>
BasicTensor<T> ssim_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                         const SsimConfig& cfg = {});

/// Weighted sum of the four losses; zero-weight terms are not evaluated.
template <typename T>
BasicTensor<T> combined_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                             const BasicTensor<T>& image, const LossWeights& weights,
                             const SsimConfig& cfg = {}, double c_frac = 0.2);

}  // namespace skydepth::losses
