#include "skydepth/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

namespace skydepth::numcore {

namespace {

// Elementwise loops above this size are split across threads. Each element
// is computed independently, so results do not depend on the split.
constexpr std::int64_t kParallelThreshold = 1 << 15;

template <typename T>
bool should_record(std::initializer_list<const BasicTensor<T>*> inputs) {
  if (!grad_enabled()) return false;
  for (const auto* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void require_defined(const BasicTensor<T>& t, Primitive kind) {
  if (!t.defined()) {
    throw ValueError(std::string(primitive_name(kind)) + ": undefined input tensor");
  }
}

[[noreturn]] void shape_error(Primitive kind, const std::string& expected, const Shape& actual) {
  throw ShapeError(std::string(primitive_name(kind)) + ": expected " + expected + ", got " +
                   to_string(actual));
}

enum class Broadcast { none, lhs_scalar, rhs_scalar };

template <typename T>
Broadcast broadcast_rule(Primitive kind, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() == b.shape()) return Broadcast::none;
  if (a.numel() == 1 && a.rank() <= b.rank()) return Broadcast::lhs_scalar;
  if (b.numel() == 1) return Broadcast::rhs_scalar;
  if (a.numel() == 1) return Broadcast::lhs_scalar;
  throw ShapeError(std::string(primitive_name(kind)) + ": operand shapes " + to_string(a.shape()) +
                   " and " + to_string(b.shape()) + " are neither equal nor scalar-broadcastable");
}

// f(a, b) -> out; grad_a(a, b, out) and grad_b(a, b, out) are the local
// partial derivatives.
template <typename T, typename F, typename GA, typename GB>
BasicTensor<T> binary(Primitive kind, const BasicTensor<T>& a, const BasicTensor<T>& b, F f,
                      GA grad_a, GB grad_b) {
  require_defined(a, kind);
  require_defined(b, kind);
  const Broadcast rule = broadcast_rule(kind, a, b);
  const Shape& shape = rule == Broadcast::lhs_scalar ? b.shape() : a.shape();
  const std::int64_t n = numel_of(shape);
  const std::int64_t sa = rule == Broadcast::lhs_scalar ? 0 : 1;
  const std::int64_t sb = rule == Broadcast::rhs_scalar ? 0 : 1;

  std::vector<T> out(static_cast<std::size_t>(n));
  {
    const T* pa = a.data().data();
    const T* pb = b.data().data();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(pa[i * sa], pb[i * sb]);
  }

  const bool rec = should_record<T>({&a, &b});
  BasicTensor<T> result(shape, std::move(out), rec);
  if (!rec) return result;

  active_graph<T>().record(Node<T>{
      kind,
      {a, b},
      result,
      [a, b, result, n, sa, sb, grad_a, grad_b](std::span<const T> g) mutable {
        const auto pa = a.data();
        const auto pb = b.data();
        const auto po = result.data();
        if (a.requires_grad()) {
          auto ga = a.grad_buffer();
          for (std::int64_t i = 0; i < n; ++i) {
            ga[i * sa] += g[i] * grad_a(pa[i * sa], pb[i * sb], po[i]);
          }
        }
        if (b.requires_grad()) {
          auto gb = b.grad_buffer();
          for (std::int64_t i = 0; i < n; ++i) {
            gb[i * sb] += g[i] * grad_b(pa[i * sa], pb[i * sb], po[i]);
          }
        }
      }});
  return result;
}

// f(x) -> out; dfdx(x, out) is the local derivative.
template <typename T, typename F, typename D>
BasicTensor<T> unary(Primitive kind, const BasicTensor<T>& x, F f, D dfdx) {
  require_defined(x, kind);
  const std::int64_t n = x.numel();
  std::vector<T> out(static_cast<std::size_t>(n));
  {
    const T* px = x.data().data();
#pragma omp parallel for schedule(static) if (n > kParallelThreshold)
    for (std::int64_t i = 0; i < n; ++i) out[i] = f(px[i]);
  }
  const bool rec = should_record<T>({&x});
  BasicTensor<T> result(x.shape(), std::move(out), rec);
  if (!rec) return result;

  active_graph<T>().record(Node<T>{kind, {x}, result,
                                   [x, result, n, dfdx](std::span<const T> g) mutable {
                                     const auto px = x.data();
                                     const auto po = result.data();
                                     auto gx = x.grad_buffer();
                                     for (std::int64_t i = 0; i < n; ++i) {
                                       gx[i] += g[i] * dfdx(px[i], po[i]);
                                     }
                                   }});
  return result;
}

template <typename T>
void require_rank4(const BasicTensor<T>& t, Primitive kind) {
  if (t.rank() != 4) shape_error(kind, "a rank-4 N x C x H x W tensor", t.shape());
}

}  // namespace

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(
      Primitive::add, a, b, [](T x, T y) { return x + y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(1); });
}

template <typename T>
BasicTensor<T> sub(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(
      Primitive::sub, a, b, [](T x, T y) { return x - y; }, [](T, T, T) { return T(1); },
      [](T, T, T) { return T(-1); });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(
      Primitive::mul, a, b, [](T x, T y) { return x * y; }, [](T, T y, T) { return y; },
      [](T x, T, T) { return x; });
}

template <typename T>
BasicTensor<T> div(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  return binary(
      Primitive::div, a, b, [](T x, T y) { return x / y; }, [](T, T y, T) { return T(1) / y; },
      [](T, T y, T out) { return -out / y; });
}

template <typename T>
BasicTensor<T> scalar_mul(const BasicTensor<T>& x, double s) {
  const T k = static_cast<T>(s);
  return unary(
      Primitive::scalar_mul, x, [k](T v) { return v * k; }, [k](T, T) { return k; });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& x) {
  return unary(
      Primitive::relu, x, [](T v) { return v > T(0) ? v : T(0); },
      [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> abs(const BasicTensor<T>& x) {
  return unary(
      Primitive::abs, x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
BasicTensor<T> square(const BasicTensor<T>& x) {
  return unary(
      Primitive::square, x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; });
}

template <typename T>
BasicTensor<T> sqrt(const BasicTensor<T>& x) {
  return unary(
      Primitive::sqrt, x, [](T v) { return std::sqrt(v); },
      [](T, T out) { return T(0.5) / out; });
}

template <typename T>
BasicTensor<T> exp(const BasicTensor<T>& x) {
  return unary(
      Primitive::exp, x, [](T v) { return std::exp(v); }, [](T, T out) { return out; });
}

template <typename T>
BasicTensor<T> clamp(const BasicTensor<T>& x, double lo, double hi) {
  if (!(lo <= hi)) {
    throw ValueError("clamp: lower bound " + std::to_string(lo) + " exceeds upper bound " +
                     std::to_string(hi));
  }
  const T l = static_cast<T>(lo);
  const T h = static_cast<T>(hi);
  return unary(
      Primitive::clamp, x, [l, h](T v) { return std::clamp(v, l, h); },
      [l, h](T v, T) { return (v >= l && v <= h) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> where(const BasicTensor<T>& cond, const BasicTensor<T>& a,
                     const BasicTensor<T>& b) {
  constexpr Primitive kind = Primitive::where;
  require_defined(cond, kind);
  require_defined(a, kind);
  require_defined(b, kind);
  if (a.shape() != cond.shape()) shape_error(kind, to_string(cond.shape()), a.shape());
  if (b.shape() != cond.shape()) shape_error(kind, to_string(cond.shape()), b.shape());
  const std::int64_t n = cond.numel();
  const auto pc = cond.data();
  const auto pa = a.data();
  const auto pb = b.data();
  std::vector<T> out(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) out[i] = pc[i] != T(0) ? pa[i] : pb[i];

  const bool rec = should_record<T>({&a, &b});
  BasicTensor<T> result(cond.shape(), std::move(out), rec);
  if (!rec) return result;
  active_graph<T>().record(Node<T>{kind, {cond, a, b}, result,
                                   [cond, a, b, n](std::span<const T> g) mutable {
                                     const auto c = cond.data();
                                     if (a.requires_grad()) {
                                       auto ga = a.grad_buffer();
                                       for (std::int64_t i = 0; i < n; ++i) {
                                         if (c[i] != T(0)) ga[i] += g[i];
                                       }
                                     }
                                     if (b.requires_grad()) {
                                       auto gb = b.grad_buffer();
                                       for (std::int64_t i = 0; i < n; ++i) {
                                         if (c[i] == T(0)) gb[i] += g[i];
                                       }
                                     }
                                   }});
  return result;
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& x) {
  require_defined(x, Primitive::mean);
  const std::int64_t n = x.numel();
  if (n == 0) throw ShapeError("mean: empty tensor " + to_string(x.shape()));
  double acc = 0.0;
  for (T v : x.data()) acc += static_cast<double>(v);
  const bool rec = should_record<T>({&x});
  BasicTensor<T> result = BasicTensor<T>::scalar(static_cast<T>(acc / static_cast<double>(n)), rec);
  if (!rec) return result;
  active_graph<T>().record(Node<T>{Primitive::mean, {x}, result,
                                   [x, n](std::span<const T> g) mutable {
                                     const T scale = g[0] / static_cast<T>(n);
                                     for (T& v : x.grad_buffer()) v += scale;
                                   }});
  return result;
}

template <typename T>
BasicTensor<T> amax(const BasicTensor<T>& x) {
  require_defined(x, Primitive::amax);
  if (x.numel() == 0) throw ShapeError("amax: empty tensor " + to_string(x.shape()));
  const auto d = x.data();
  std::size_t arg = 0;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (d[i] > d[arg]) arg = i;
  }
  const bool rec = should_record<T>({&x});
  BasicTensor<T> result = BasicTensor<T>::scalar(d[arg], rec);
  if (!rec) return result;
  active_graph<T>().record(Node<T>{Primitive::amax, {x}, result,
                                   [x, arg](std::span<const T> g) mutable {
                                     x.grad_buffer()[arg] += g[0];
                                   }});
  return result;
}

template <typename T>
BasicTensor<T> conv2d(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, Conv2dAttrs attrs) {
  constexpr Primitive kind = Primitive::conv2d;
  require_defined(x, kind);
  require_defined(weight, kind);
  require_rank4(x, kind);
  require_rank4(weight, kind);
  if (weight.dim(1) != x.dim(1)) {
    shape_error(kind, "weight with " + std::to_string(x.dim(1)) + " input channels",
                weight.shape());
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    shape_error(kind, "bias of shape [" + std::to_string(weight.dim(0)) + "]", bias.shape());
  }
  if (attrs.stride != 1 && attrs.stride != 2) {
    throw ValueError("conv2d: stride must be 1 or 2, got " + std::to_string(attrs.stride));
  }
  if (attrs.padding < 0) throw ValueError("conv2d: negative padding");

  kernels::ConvGeometry g;
  g.batch = x.dim(0);
  g.in_channels = x.dim(1);
  g.height = x.dim(2);
  g.width = x.dim(3);
  g.out_channels = weight.dim(0);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = attrs.stride;
  g.padding = attrs.padding;
  g.pad_mode = attrs.pad_mode;
  if (g.height + 2 * g.padding < g.kernel_h || g.width + 2 * g.padding < g.kernel_w) {
    shape_error(kind,
                "padded input at least " + std::to_string(g.kernel_h) + "x" +
                    std::to_string(g.kernel_w),
                x.shape());
  }

  const Shape out_shape{g.batch, g.out_channels, g.out_height(), g.out_width()};
  std::vector<T> out(static_cast<std::size_t>(numel_of(out_shape)));
  const bool rec = should_record<T>({&x, &weight, &bias});
  auto workspace = rec ? std::make_shared<kernels::ConvWorkspace<T>>() : nullptr;
  kernels::conv2d_forward<T>(g, x.data(), weight.data(),
                             bias.defined() ? bias.data() : std::span<const T>{}, out,
                             workspace.get());

  BasicTensor<T> result(out_shape, std::move(out), rec);
  if (!rec) return result;

  std::vector<BasicTensor<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  active_graph<T>().record(Node<T>{
      kind, std::move(inputs), result,
      [x, weight, bias, g, workspace](std::span<const T> gy) mutable {
        std::span<T> gx = x.requires_grad() ? x.grad_buffer() : std::span<T>{};
        std::span<T> gw = weight.requires_grad() ? weight.grad_buffer() : std::span<T>{};
        std::span<T> gb =
            bias.defined() && bias.requires_grad() ? bias.grad_buffer() : std::span<T>{};
        kernels::conv2d_backward<T>(g, x.data(), weight.data(), gy, workspace.get(), gx, gw, gb);
      }});
  return result;
}

template <typename T>
BasicTensor<T> max_pool2(const BasicTensor<T>& x) {
  constexpr Primitive kind = Primitive::max_pool2;
  require_defined(x, kind);
  require_rank4(x, kind);
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0 || h == 0 || w == 0) {
    shape_error(kind, "even, non-zero spatial extents", x.shape());
  }
  const std::int64_t ho = h / 2, wo = w / 2;
  const Shape out_shape{n, c, ho, wo};
  std::vector<T> out(static_cast<std::size_t>(numel_of(out_shape)));
  std::vector<std::int64_t> argmax(out.size());
  const auto px = x.data();
  const std::int64_t planes = n * c;
#pragma omp parallel for schedule(static) if (planes > 1 && h * w > 4096)
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    const std::int64_t in_off = pl * h * w;
    const std::int64_t out_off = pl * ho * wo;
    for (std::int64_t oy = 0; oy < ho; ++oy) {
      for (std::int64_t ox = 0; ox < wo; ++ox) {
        // Window scanned in row-major order; strict > keeps the first maximum.
        std::int64_t best = in_off + (2 * oy) * w + 2 * ox;
        for (std::int64_t dy = 0; dy < 2; ++dy) {
          for (std::int64_t dx = 0; dx < 2; ++dx) {
            const std::int64_t idx = in_off + (2 * oy + dy) * w + 2 * ox + dx;
            if (px[idx] > px[best]) best = idx;
          }
        }
        out[out_off + oy * wo + ox] = px[best];
        argmax[out_off + oy * wo + ox] = best;
      }
    }
  }
  const bool rec = should_record<T>({&x});
  BasicTensor<T> result(out_shape, std::move(out), rec);
  if (!rec) return result;
  active_graph<T>().record(Node<T>{kind, {x}, result,
                                   [x, argmax = std::move(argmax)](std::span<const T> g) mutable {
                                     auto gx = x.grad_buffer();
                                     for (std::size_t i = 0; i < argmax.size(); ++i) {
                                       gx[argmax[i]] += g[i];
                                     }
                                   }});
  return result;
}

template <typename T>
BasicTensor<T> upsample2(const BasicTensor<T>& x) {
  constexpr Primitive kind = Primitive::upsample2;
  require_defined(x, kind);
  require_rank4(x, kind);
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t ho = 2 * h, wo = 2 * w;
  const Shape out_shape{n, c, ho, wo};
  std::vector<T> out(static_cast<std::size_t>(numel_of(out_shape)));
  const auto px = x.data();
  const std::int64_t planes = n * c;
#pragma omp parallel for schedule(static) if (planes > 1 && h * w > 4096)
  for (std::int64_t pl = 0; pl < planes; ++pl) {
    for (std::int64_t oy = 0; oy < ho; ++oy) {
      const T* src = px.data() + pl * h * w + (oy / 2) * w;
      T* dst = out.data() + pl * ho * wo + oy * wo;
      for (std::int64_t ox = 0; ox < wo; ++ox) dst[ox] = src[ox / 2];
    }
  }
  const bool rec = should_record<T>({&x});
  BasicTensor<T> result(out_shape, std::move(out), rec);
  if (!rec) return result;
  active_graph<T>().record(Node<T>{kind, {x}, result,
                                   [x, planes, h, w](std::span<const T> g) mutable {
                                     auto gx = x.grad_buffer();
                                     const std::int64_t wo = 2 * w;
                                     for (std::int64_t pl = 0; pl < planes; ++pl) {
                                       for (std::int64_t oy = 0; oy < 2 * h; ++oy) {
                                         const T* src = g.data() + (pl * 2 * h + oy) * wo;
                                         T* dst = gx.data() + pl * h * w + (oy / 2) * w;
                                         for (std::int64_t ox = 0; ox < wo; ++ox) {
                                           dst[ox / 2] += src[ox];
                                         }
                                       }
                                     }
                                   }});
  return result;
}

template <typename T>
BasicTensor<T> concat(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  constexpr Primitive kind = Primitive::concat;
  require_defined(a, kind);
  require_defined(b, kind);
  require_rank4(a, kind);
  require_rank4(b, kind);
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    shape_error(kind,
                "second operand [" + std::to_string(a.dim(0)) + "xCx" + std::to_string(a.dim(2)) +
                    "x" + std::to_string(a.dim(3)) + "]",
                b.shape());
  }
  const std::int64_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  const std::int64_t plane = a.dim(2) * a.dim(3);
  const Shape out_shape{n, ca + cb, a.dim(2), a.dim(3)};
  std::vector<T> out;
  out.reserve(static_cast<std::size_t>(numel_of(out_shape)));
  for (std::int64_t i = 0; i < n; ++i) {
    const auto sa = a.data().subspan(static_cast<std::size_t>(i * ca * plane),
                                     static_cast<std::size_t>(ca * plane));
    const auto sb = b.data().subspan(static_cast<std::size_t>(i * cb * plane),
                                     static_cast<std::size_t>(cb * plane));
    out.insert(out.end(), sa.begin(), sa.end());
    out.insert(out.end(), sb.begin(), sb.end());
  }
  const bool rec = should_record<T>({&a, &b});
  BasicTensor<T> result(out_shape, std::move(out), rec);
  if (!rec) return result;
  active_graph<T>().record(Node<T>{
      kind, {a, b}, result, [a, b, n, ca, cb, plane](std::span<const T> g) mutable {
        for (std::int64_t i = 0; i < n; ++i) {
          const T* src = g.data() + i * (ca + cb) * plane;
          if (a.requires_grad()) {
            T* dst = a.grad_buffer().data() + i * ca * plane;
            for (std::int64_t j = 0; j < ca * plane; ++j) dst[j] += src[j];
          }
          if (b.requires_grad()) {
            T* dst = b.grad_buffer().data() + i * cb * plane;
            for (std::int64_t j = 0; j < cb * plane; ++j) dst[j] += src[ca * plane + j];
          }
        }
      }});
  return result;
}

template <typename T>
BasicTensor<T> primitive_forward(Primitive kind, std::span<const BasicTensor<T>> in,
                                 const PrimitiveAttrs& attrs) {
  const auto arity = [&](std::size_t lo, std::size_t hi) {
    if (in.size() < lo || in.size() > hi) {
      throw ValueError(std::string(primitive_name(kind)) + ": expected " + std::to_string(lo) +
                       (lo == hi ? "" : "-" + std::to_string(hi)) + " inputs, got " +
                       std::to_string(in.size()));
    }
  };
  switch (kind) {
    case Primitive::add: arity(2, 2); return add(in[0], in[1]);
    case Primitive::sub: arity(2, 2); return sub(in[0], in[1]);
    case Primitive::mul: arity(2, 2); return mul(in[0], in[1]);
    case Primitive::div: arity(2, 2); return div(in[0], in[1]);
    case Primitive::scalar_mul: arity(1, 1); return scalar_mul(in[0], attrs.scalar);
    case Primitive::relu: arity(1, 1); return relu(in[0]);
    case Primitive::conv2d:
      arity(2, 3);
      return conv2d(in[0], in[1], in.size() == 3 ? in[2] : BasicTensor<T>{}, attrs.conv);
    case Primitive::max_pool2: arity(1, 1); return max_pool2(in[0]);
    case Primitive::upsample2: arity(1, 1); return upsample2(in[0]);
    case Primitive::concat: arity(2, 2); return concat(in[0], in[1]);
    case Primitive::mean: arity(1, 1); return mean(in[0]);
    case Primitive::amax: arity(1, 1); return amax(in[0]);
    case Primitive::abs: arity(1, 1); return abs(in[0]);
    case Primitive::square: arity(1, 1); return square(in[0]);
    case Primitive::sqrt: arity(1, 1); return sqrt(in[0]);
    case Primitive::exp: arity(1, 1); return exp(in[0]);
    case Primitive::clamp: arity(1, 1); return clamp(in[0], attrs.lo, attrs.hi);
    case Primitive::where: arity(3, 3); return where(in[0], in[1], in[2]);
  }
  throw ValueError("primitive_forward: unknown primitive kind " +
                   std::to_string(static_cast<int>(kind)));
}

#define SKYDEPTH_INSTANTIATE_OPS(T)                                                          \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> sub(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> div(const BasicTensor<T>&, const BasicTensor<T>&);                 \
  template BasicTensor<T> scalar_mul(const BasicTensor<T>&, double);                         \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                       \
  template BasicTensor<T> abs(const BasicTensor<T>&);                                        \
  template BasicTensor<T> square(const BasicTensor<T>&);                                     \
  template BasicTensor<T> sqrt(const BasicTensor<T>&);                                       \
  template BasicTensor<T> exp(const BasicTensor<T>&);                                        \
  template BasicTensor<T> clamp(const BasicTensor<T>&, double, double);                      \
  template BasicTensor<T> where(const BasicTensor<T>&, const BasicTensor<T>&,                \
                                const BasicTensor<T>&);                                      \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                       \
  template BasicTensor<T> amax(const BasicTensor<T>&);                                       \
  template BasicTensor<T> conv2d(const BasicTensor<T>&, const BasicTensor<T>&,               \
                                 const BasicTensor<T>&, Conv2dAttrs);                        \
  template BasicTensor<T> max_pool2(const BasicTensor<T>&);                                  \
  template BasicTensor<T> upsample2(const BasicTensor<T>&);                                  \
  template BasicTensor<T> concat(const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> primitive_forward(Primitive, std::span<const BasicTensor<T>>,      \
                                            const PrimitiveAttrs&);

SKYDEPTH_INSTANTIATE_OPS(float)
SKYDEPTH_INSTANTIATE_OPS(double)

#undef SKYDEPTH_INSTANTIATE_OPS

}  // namespace skydepth::numcore
