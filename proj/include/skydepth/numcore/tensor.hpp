#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "skydepth/error.hpp"

namespace skydepth::numcore {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

template <typename T>
struct TensorStorage {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until the first accumulation
  bool requires_grad = false;
  bool recorded = false;  // output of a primitive recorded on a graph
};

/// Dense row-major tensor with an optional gradient buffer.
///
/// A tensor is a shared handle: copies alias the same storage, so a graph
/// node and user code see the same gradient. Activations use N x C x H x W.
/// Rank-0 tensors (empty shape) are scalars.
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  BasicTensor(Shape shape, std::vector<T> data, bool requires_grad = false)
      : impl_(std::make_shared<TensorStorage<T>>()) {
    for (auto d : shape) {
      if (d < 0) throw ShapeError("tensor: negative extent in " + to_string(shape));
    }
    if (numel_of(shape) != static_cast<std::int64_t>(data.size())) {
      throw ShapeError("tensor: shape " + to_string(shape) + " needs " +
                       std::to_string(numel_of(shape)) + " values, got " +
                       std::to_string(data.size()));
    }
    impl_->shape = std::move(shape);
    impl_->data = std::move(data);
    impl_->requires_grad = requires_grad;
  }

  static BasicTensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), T(0), requires_grad);
  }

  static BasicTensor full(Shape shape, T value, bool requires_grad = false) {
    const auto n = static_cast<std::size_t>(numel_of(shape));
    return BasicTensor(std::move(shape), std::vector<T>(n, value), requires_grad);
  }

  static BasicTensor scalar(T value, bool requires_grad = false) {
    return BasicTensor(Shape{}, std::vector<T>{value}, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const { return impl_->shape; }
  std::size_t rank() const { return impl_->shape.size(); }
  std::int64_t dim(std::size_t i) const { return impl_->shape.at(i); }
  std::int64_t numel() const { return static_cast<std::int64_t>(impl_->data.size()); }

  std::span<const T> data() const { return impl_->data; }
  // Writable view for parameter initialisation and optimizer updates. The
  // handle is shared, so constness of the handle does not protect the data.
  std::span<T> mutable_data() const { return impl_->data; }

  T item() const {
    if (impl_->data.size() != 1) {
      throw ShapeError("item: tensor of shape " + to_string(shape()) + " is not a scalar");
    }
    return impl_->data[0];
  }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool on) const { impl_->requires_grad = on; }
  bool is_leaf() const { return !impl_->recorded; }

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const T> grad() const { return impl_->grad; }

  // Zero-filled on first use.
  std::span<T> grad_buffer() const {
    if (impl_->grad.empty()) impl_->grad.assign(impl_->data.size(), T(0));
    return impl_->grad;
  }

  void zero_grad() const { impl_->grad.clear(); }

  bool same_as(const BasicTensor& other) const { return impl_ == other.impl_; }

  BasicTensor detach() const { return BasicTensor(shape(), impl_->data, false); }

  template <typename U>
  BasicTensor<U> cast(bool requires_grad = false) const {
    return BasicTensor<U>(shape(), std::vector<U>(impl_->data.begin(), impl_->data.end()),
                          requires_grad);
  }

  // Graph bookkeeping; not part of the user-facing surface.
  void mark_recorded() const { impl_->recorded = true; }

 private:
  std::shared_ptr<TensorStorage<T>> impl_;
};

using Tensor = BasicTensor<float>;
using TensorD = BasicTensor<double>;

}  // namespace skydepth::numcore
