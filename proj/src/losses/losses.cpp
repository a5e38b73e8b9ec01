#include "skydepth/losses.hpp"

#include <string>

#include "skydepth/error.hpp"
#include "skydepth/numcore/ops.hpp"

namespace skydepth::losses {

namespace nc = numcore;

void LossWeights::validate() const {
  for (double w : {edge, ssim, l1, berhu}) {
    if (!(w >= 0.0)) throw ValueError("loss weights must be non-negative and finite");
  }
  if (edge == 0.0 && ssim == 0.0 && l1 == 0.0 && berhu == 0.0) {
    throw ValueError("loss weights: at least one weight must be positive");
  }
}

SsimConfig SsimConfig::for_range(double dynamic_range, int window) {
  SsimConfig cfg;
  cfg.window = window;
  cfg.dynamic_range = dynamic_range;
  cfg.c1 = (0.01 * dynamic_range) * (0.01 * dynamic_range);
  cfg.c2 = (0.03 * dynamic_range) * (0.03 * dynamic_range);
  return cfg;
}

void SsimConfig::validate() const {
  if (window <= 0 || window % 2 == 0) {
    throw ValueError("ssim: window must be odd and positive, got " + std::to_string(window));
  }
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ValueError("ssim: c1 and c2 must be positive");
}

namespace {

template <typename T>
void require_same_shape(const char* what, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(what) + ": prediction " + nc::to_string(a.shape()) +
                     " and target " + nc::to_string(b.shape()) + " differ");
  }
}

template <typename T>
void require_single_channel(const char* what, const BasicTensor<T>& t) {
  if (t.rank() != 4 || t.dim(1) != 1) {
    throw ShapeError(std::string(what) + ": expected N x 1 x H x W, got " + nc::to_string(t.shape()));
  }
}

template <typename T>
BasicTensor<T> constant(T v) {
  return BasicTensor<T>::scalar(v);
}

// Mean over channels, detached: the image is an input, never a parameter.
template <typename T>
BasicTensor<T> grayscale(const BasicTensor<T>& image) {
  const std::int64_t n = image.dim(0), c = image.dim(1), plane = image.dim(2) * image.dim(3);
  if (c == 1) return image.detach();
  std::vector<T> out(static_cast<std::size_t>(n * plane), T(0));
  const auto d = image.data();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t p = 0; p < plane; ++p) {
      double acc = 0.0;
      for (std::int64_t ch = 0; ch < c; ++ch) acc += d[(i * c + ch) * plane + p];
      out[i * plane + p] = static_cast<T>(acc / static_cast<double>(c));
    }
  }
  return BasicTensor<T>({n, 1, image.dim(2), image.dim(3)}, std::move(out));
}

}  // namespace

template <typename T>
BasicTensor<T> l1_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target) {
  require_same_shape("l1_loss", pred, target);
  return nc::mean(nc::abs(nc::sub(pred, target)));
}

template <typename T>
BasicTensor<T> berhu_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target, double c_frac) {
  require_same_shape("berhu_loss", pred, target);
  if (!(c_frac > 0.0)) throw ValueError("berhu_loss: c_frac must be positive");
  const auto err = nc::sub(pred, target);
  const auto mag = nc::abs(err);
  const auto peak = nc::amax(mag);
  if (peak.item() == T(0)) return nc::scalar_mul(nc::mean(mag), 0.0);

  const auto c = nc::scalar_mul(peak, c_frac);
  const auto quadratic =
      nc::div(nc::add(nc::square(err), nc::square(c)), nc::scalar_mul(c, 2.0));

  const T threshold = c.item();
  std::vector<T> above(static_cast<std::size_t>(mag.numel()));
  const auto m = mag.data();
  for (std::size_t i = 0; i < above.size(); ++i) above[i] = m[i] > threshold ? T(1) : T(0);
  const BasicTensor<T> cond(mag.shape(), std::move(above));

  return nc::mean(nc::where(cond, quadratic, mag));
}

template <typename T>
BasicTensor<T> edge_loss(const BasicTensor<T>& pred, const BasicTensor<T>& image) {
  require_single_channel("edge_loss", pred);
  if (image.rank() != 4 || image.dim(0) != pred.dim(0) || image.dim(2) != pred.dim(2) ||
      image.dim(3) != pred.dim(3)) {
    throw ShapeError("edge_loss: image " + nc::to_string(image.shape()) +
                     " does not match prediction " + nc::to_string(pred.shape()));
  }
  if (pred.dim(2) < 2 || pred.dim(3) < 2) {
    throw ShapeError("edge_loss: need at least 2x2 pixels, got " + nc::to_string(pred.shape()));
  }
  const BasicTensor<T> dx({1, 1, 1, 2}, {T(-1), T(1)});
  const BasicTensor<T> dy({1, 1, 2, 1}, {T(-1), T(1)});
  const auto gray = grayscale(image);

  const auto axis_term = [&](const BasicTensor<T>& kernel) {
    const auto image_grad = nc::mean(nc::abs(nc::conv2d(gray, kernel, BasicTensor<T>{})));
    const auto weight = nc::exp(nc::scalar_mul(image_grad, -1.0));
    return nc::mean(nc::abs(nc::mul(nc::conv2d(pred, kernel, BasicTensor<T>{}), weight)));
  };
  return nc::add(axis_term(dx), axis_term(dy));
}

template <typename T>
BasicTensor<T> ssim_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                         const SsimConfig& cfg) {
  cfg.validate();
  require_same_shape("ssim_loss", pred, target);
  require_single_channel("ssim_loss", pred);
  const int k = cfg.window;
  if (pred.dim(2) < k || pred.dim(3) < k) {
    throw ShapeError("ssim_loss: image " + nc::to_string(pred.shape()) + " smaller than the " +
                     std::to_string(k) + "x" + std::to_string(k) + " window");
  }
  const auto box = BasicTensor<T>::full({1, 1, k, k}, static_cast<T>(1.0 / (k * k)));
  const auto local_mean = [&](const BasicTensor<T>& x) {
    return nc::conv2d(x, box, BasicTensor<T>{});
  };
  const auto c1 = constant(static_cast<T>(cfg.c1));
  const auto c2 = constant(static_cast<T>(cfg.c2));

  const auto mu_p = local_mean(pred);
  const auto mu_t = local_mean(target);
  const auto var_p = nc::sub(local_mean(nc::square(pred)), nc::square(mu_p));
  const auto var_t = nc::sub(local_mean(nc::square(target)), nc::square(mu_t));
  const auto cov = nc::sub(local_mean(nc::mul(pred, target)), nc::mul(mu_p, mu_t));

  const auto num = nc::mul(nc::add(nc::scalar_mul(nc::mul(mu_p, mu_t), 2.0), c1),
                           nc::add(nc::scalar_mul(cov, 2.0), c2));
  const auto den = nc::mul(nc::add(nc::add(nc::square(mu_p), nc::square(mu_t)), c1),
                           nc::add(nc::add(var_p, var_t), c2));
  return nc::sub(constant(T(1)), nc::mean(nc::div(num, den)));
}

template <typename T>
BasicTensor<T> combined_loss(const BasicTensor<T>& pred, const BasicTensor<T>& target,
                             const BasicTensor<T>& image, const LossWeights& weights,
                             const SsimConfig& cfg, double c_frac) {
  weights.validate();
  BasicTensor<T> total;
  const auto accumulate = [&](double w, auto&& term) {
    if (w == 0.0) return;
    auto weighted = nc::scalar_mul(term(), w);
    total = total.defined() ? nc::add(total, weighted) : weighted;
  };
  accumulate(weights.edge, [&] { return edge_loss(pred, image); });
  accumulate(weights.ssim, [&] { return ssim_loss(pred, target, cfg); });
  accumulate(weights.l1, [&] { return l1_loss(pred, target); });
  accumulate(weights.berhu, [&] { return berhu_loss(pred, target, c_frac); });
  return total;
}

#define SKYDEPTH_INSTANTIATE_LOSSES(T)                                                        \
  template BasicTensor<T> l1_loss(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> berhu_loss(const BasicTensor<T>&, const BasicTensor<T>&, double);   \
  template BasicTensor<T> edge_loss(const BasicTensor<T>&, const BasicTensor<T>&);            \
  template BasicTensor<T> ssim_loss(const BasicTensor<T>&, const BasicTensor<T>&,             \
                                    const SsimConfig&);                                       \
  template BasicTensor<T> combined_loss(const BasicTensor<T>&, const BasicTensor<T>&,         \
                                        const BasicTensor<T>&, const LossWeights&,            \
                                        const SsimConfig&, double);

SKYDEPTH_INSTANTIATE_LOSSES(float)
SKYDEPTH_INSTANTIATE_LOSSES(double)

#undef SKYDEPTH_INSTANTIATE_LOSSES

}  // namespace skydepth::losses
