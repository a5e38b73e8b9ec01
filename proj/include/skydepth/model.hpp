#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skydepth/numcore/tensor.hpp"
#include "skydepth/types.hpp"

namespace skydepth::model {

using numcore::BasicTensor;

struct ModelConfig {
  int levels = 3;
  int base_channels = 8;
  int in_channels = 1;
  int out_channels = 1;
  std::uint64_t seed = 0;

  /// Closer to the original network scale (use with a 256 px crop).
  static ModelConfig large(std::uint64_t seed = 0) { return {4, 16, 1, 1, seed}; }

  int channels_at(int level) const { return base_channels << level; }
  int divisor() const { return 1 << levels; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
struct NamedParam {
  std::string name;
  BasicTensor<T> tensor;
};

/// U-Net parameters in construction order. Names follow
/// enc{i}.conv{j}.{w,b}, mid.conv{j}.{w,b}, dec{i}.conv{j}.{w,b}, head.{w,b}.
template <typename T>
class BasicModel {
 public:
  BasicModel() = default;
  BasicModel(ModelConfig config, std::vector<NamedParam<T>> params)
      : config_(config), params_(std::move(params)) {}

  const ModelConfig& config() const { return config_; }
  const std::vector<NamedParam<T>>& params() const { return params_; }

  const BasicTensor<T>& param(const std::string& name) const;
  std::int64_t parameter_count() const;

  void set_requires_grad(bool on) const;
  void zero_grad() const;

  /// Deep copy with converted element type.
  template <typename U>
  BasicModel<U> cast() const {
    std::vector<NamedParam<U>> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back({p.name, p.tensor.template cast<U>()});
    return BasicModel<U>(config_, std::move(out));
  }

  /// Deep copy; the clone does not share storage with this model.
  BasicModel clone() const { return cast<T>(); }

 private:
  ModelConfig config_;
  std::vector<NamedParam<T>> params_;
};

using Model = BasicModel<float>;

/// Parameter names and shapes implied by a configuration, in construction
/// order. Used to validate checkpoints against their embedded config.
std::vector<std::pair<std::string, numcore::Shape>> unet_layout(const ModelConfig& cfg);

/// He-normal weights (std sqrt(2 / fan_in)) and zero biases, drawn in layout
/// order from a generator seeded with cfg.seed.
Model unet_init(const ModelConfig& cfg);

/// Perturbations for wiring checks; both default to "off".
struct UnetProbe {
  bool zero_deepest = false;  // zero the pooled output of the last encoder level
  int zero_skip = -1;         // zero the skip tensor of this encoder level
};

/// image: N x in_channels x H x W with H and W divisible by 2^levels.
/// Returns N x 1 x H x W, linear (unclamped) class-unit output.
template <typename T>
BasicTensor<T> unet_forward(const BasicModel<T>& model, const BasicTensor<T>& image,
                            const UnetProbe& probe = {});

/// Inference without graph recording; returns the H x W map.
DepthMask predict(const Model& model, const ImageTensor& image);

}  // namespace skydepth::model
