#include "skydepth/model.hpp"

#include <cmath>
#include <random>

#include "skydepth/numcore/graph.hpp"
#include "skydepth/numcore/ops.hpp"

namespace skydepth::model {

namespace nc = numcore;

void ModelConfig::validate() const {
  if (levels < 1 || levels > 8) {
    throw ValueError("model: levels must be in [1, 8], got " + std::to_string(levels));
  }
  if (base_channels < 1) throw ValueError("model: base_channels must be positive");
  if (in_channels < 1) throw ValueError("model: in_channels must be positive");
  if (out_channels != 1) throw ValueError("model: out_channels must be 1");
}

template <typename T>
const BasicTensor<T>& BasicModel<T>::param(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return p.tensor;
  }
  throw ValueError("model: no parameter named '" + name + "'");
}

template <typename T>
std::int64_t BasicModel<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.tensor.numel();
  return n;
}

template <typename T>
void BasicModel<T>::set_requires_grad(bool on) const {
  for (const auto& p : params_) {
    BasicTensor<T> t = p.tensor;
    t.set_requires_grad(on);
  }
}

template <typename T>
void BasicModel<T>::zero_grad() const {
  for (const auto& p : params_) {
    BasicTensor<T> t = p.tensor;
    t.zero_grad();
  }
}

std::vector<std::pair<std::string, nc::Shape>> unet_layout(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<std::pair<std::string, nc::Shape>> layout;
  const auto conv = [&](const std::string& prefix, std::int64_t out, std::int64_t in,
                        std::int64_t k) {
    layout.emplace_back(prefix + ".w", nc::Shape{out, in, k, k});
    layout.emplace_back(prefix + ".b", nc::Shape{out});
  };
  const int levels = cfg.levels;
  for (int i = 0; i < levels; ++i) {
    const int in = i == 0 ? cfg.in_channels : cfg.channels_at(i - 1);
    const std::string p = "enc" + std::to_string(i);
    conv(p + ".conv0", cfg.channels_at(i), in, 3);
    conv(p + ".conv1", cfg.channels_at(i), cfg.channels_at(i), 3);
  }
  conv("mid.conv0", cfg.channels_at(levels), cfg.channels_at(levels - 1), 3);
  conv("mid.conv1", cfg.channels_at(levels), cfg.channels_at(levels), 3);
  for (int i = levels - 1; i >= 0; --i) {
    const std::string p = "dec" + std::to_string(i);
    conv(p + ".conv0", cfg.channels_at(i), cfg.channels_at(i + 1) + cfg.channels_at(i), 3);
    conv(p + ".conv1", cfg.channels_at(i), cfg.channels_at(i), 3);
  }
  conv("head", cfg.out_channels, cfg.channels_at(0), 1);
  return layout;
}

Model unet_init(const ModelConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  std::vector<NamedParam<float>> params;
  for (auto& [name, shape] : unet_layout(cfg)) {
    std::vector<float> values(static_cast<std::size_t>(nc::numel_of(shape)), 0.0f);
    if (shape.size() == 4) {
      const double fan_in = static_cast<double>(shape[1] * shape[2] * shape[3]);
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      for (float& v : values) v = static_cast<float>(dist(rng));
    }
    params.push_back({name, nc::Tensor(shape, std::move(values))});
  }
  return Model(cfg, std::move(params));
}

template <typename T>
BasicTensor<T> unet_forward(const BasicModel<T>& model, const BasicTensor<T>& image,
                            const UnetProbe& probe) {
  const ModelConfig& cfg = model.config();
  if (image.rank() != 4 || image.dim(1) != cfg.in_channels) {
    throw ShapeError("unet_forward: expected N x " + std::to_string(cfg.in_channels) +
                     " x H x W input, got " + nc::to_string(image.shape()));
  }
  const int div = cfg.divisor();
  if (image.dim(2) % div != 0 || image.dim(3) % div != 0 || image.dim(2) == 0 ||
      image.dim(3) == 0) {
    throw ShapeError("unet_forward: input extent " + std::to_string(image.dim(2)) + "x" +
                     std::to_string(image.dim(3)) + " must be divisible by 2^levels = " +
                     std::to_string(div));
  }

  const nc::Conv2dAttrs same{1, 1, nc::PadMode::zero};
  const auto block = [&](const std::string& prefix, BasicTensor<T> x) {
    for (int j = 0; j < 2; ++j) {
      const std::string p = prefix + ".conv" + std::to_string(j);
      x = nc::relu(nc::conv2d(x, model.param(p + ".w"), model.param(p + ".b"), same));
    }
    return x;
  };
  const auto zeros_like = [](const BasicTensor<T>& t) { return BasicTensor<T>::zeros(t.shape()); };

  std::vector<BasicTensor<T>> skips;
  BasicTensor<T> x = image;
  for (int i = 0; i < cfg.levels; ++i) {
    x = block("enc" + std::to_string(i), x);
    skips.push_back(x);
    x = nc::max_pool2(x);
  }
  if (probe.zero_deepest) x = zeros_like(x);
  x = block("mid", x);
  for (int i = cfg.levels - 1; i >= 0; --i) {
    const auto& skip = skips[static_cast<std::size_t>(i)];
    x = nc::concat(nc::upsample2(x), probe.zero_skip == i ? zeros_like(skip) : skip);
    x = block("dec" + std::to_string(i), x);
  }
  return nc::conv2d(x, model.param("head.w"), model.param("head.b"));
}

DepthMask predict(const Model& model, const ImageTensor& image) {
  nc::NoGradGuard no_grad;
  return mask_from_tensor(unet_forward(model, to_tensor(image)));
}

template class BasicModel<float>;
template class BasicModel<double>;
template BasicTensor<float> unet_forward(const BasicModel<float>&, const BasicTensor<float>&,
                                         const UnetProbe&);
template BasicTensor<double> unet_forward(const BasicModel<double>&, const BasicTensor<double>&,
                                          const UnetProbe&);

}  // namespace skydepth::model
