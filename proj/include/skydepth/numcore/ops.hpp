#pragma once

#include <span>

#include "skydepth/kernels/conv2d.hpp"
#include "skydepth/numcore/graph.hpp"
#include "skydepth/numcore/tensor.hpp"

namespace skydepth::numcore {

using kernels::PadMode;

struct Conv2dAttrs {
  int stride = 1;  // 1 or 2
  int padding = 0;
  PadMode pad_mode = PadMode::zero;
};

/// Attribute bag for primitive_forward. Only the fields a primitive reads
/// matter: `scalar` for scalar_mul, `lo`/`hi` for clamp, `conv` for conv2d.
struct PrimitiveAttrs {
  double scalar = 1.0;
  double lo = 0.0;
  double hi = 0.0;
  Conv2dAttrs conv{};
};

// Binary elementwise ops take equal shapes, or one operand with a single
// element that is broadcast over the other.
template <typename T> BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b);
template <typename T> BasicTensor<T> scalar_mul(const BasicTensor<T>& x, double s);

template <typename T> BasicTensor<T> relu(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> abs(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> square(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> sqrt(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> exp(const BasicTensor<T>& x);
template <typename T> BasicTensor<T> clamp(const BasicTensor<T>& x, double lo, double hi);

/// Elementwise select: cond != 0 picks `a`, else `b`. `cond` is treated as a
/// constant (no gradient flows into it).
template <typename T>
BasicTensor<T> where(const BasicTensor<T>& cond, const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Mean of all elements, returned as a rank-0 tensor.
template <typename T> BasicTensor<T> mean(const BasicTensor<T>& x);

/// Max of all elements as a rank-0 tensor; on ties the gradient goes to the
/// first maximal element in row-major order.
template <typename T> BasicTensor<T> amax(const BasicTensor<T>& x);

/// x: N x C x H x W, weight: Co x C x kh x kw, bias: Co or undefined.
template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, Conv2dAttrs attrs = {});

/// 2x2 window, stride 2. H and W must be even.
template <typename T> BasicTensor<T> max_pool2(const BasicTensor<T>& x);

/// Nearest-neighbour x2 in both spatial axes.
template <typename T> BasicTensor<T> upsample2(const BasicTensor<T>& x);

/// Concatenate along the channel axis of two N x C x H x W tensors.
template <typename T> BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Generic entry point used by the verification harness. Inputs are
/// positional: (a, b) for binary ops, (x, w[, b]) for conv2d, (cond, a, b)
/// for where, (x) otherwise. Throws ValueError on an unknown kind or wrong
/// arity, ShapeError on non-conforming shapes.
template <typename T>
BasicTensor<T> primitive_forward(Primitive kind, std::span<const BasicTensor<T>> inputs,
                                 const PrimitiveAttrs& attrs = {});

}  // namespace skydepth::numcore
