#include "skydepth/kernels/conv2d.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cassert>

namespace skydepth::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Source coordinate for each output position along one axis and kernel tap,
// or -1 for a zero-padded tap.
std::vector<std::int64_t> axis_map(std::int64_t in, std::int64_t out, std::int64_t tap,
                                   std::int64_t stride, std::int64_t pad,
                                   PadMode mode) {
  std::vector<std::int64_t> map(static_cast<std::size_t>(out));
  for (std::int64_t o = 0; o < out; ++o) {
    std::int64_t i = o * stride + tap - pad;
    if (i < 0 || i >= in) i = mode == PadMode::zero ? -1 : reflect_index(i, in);
    map[static_cast<std::size_t>(o)] = i;
  }
  return map;
}

struct AxisMaps {
  std::vector<std::vector<std::int64_t>> rows;  // [kernel_h][out_h]
  std::vector<std::vector<std::int64_t>> cols;  // [kernel_w][out_w]
};

AxisMaps build_maps(const ConvGeometry& g) {
  AxisMaps m;
  for (std::int64_t ki = 0; ki < g.kernel_h; ++ki) {
    m.rows.push_back(axis_map(g.height, g.out_height(), ki, g.stride, g.padding,
                              g.pad_mode));
  }
  for (std::int64_t kj = 0; kj < g.kernel_w; ++kj) {
    m.cols.push_back(axis_map(g.width, g.out_width(), kj, g.stride, g.padding,
                              g.pad_mode));
  }
  return m;
}

bool is_pointwise(const ConvGeometry& g) {
  return g.kernel_h == 1 && g.kernel_w == 1 && g.stride == 1 && g.padding == 0;
}

template <typename T>
void im2col(const ConvGeometry& g, const AxisMaps& maps, const T* x, T* col) {
  const std::int64_t ho = g.out_height();
  const std::int64_t wo = g.out_width();
  const std::int64_t plane = g.height * g.width;
  for (std::int64_t c = 0; c < g.in_channels; ++c) {
    const T* src_plane = x + c * plane;
    for (std::int64_t ki = 0; ki < g.kernel_h; ++ki) {
      const auto& rmap = maps.rows[static_cast<std::size_t>(ki)];
      for (std::int64_t kj = 0; kj < g.kernel_w; ++kj) {
        const auto& cmap = maps.cols[static_cast<std::size_t>(kj)];
        T* dst = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = rmap[static_cast<std::size_t>(oy)];
          T* drow = dst + oy * wo;
          if (iy < 0) {
            std::fill(drow, drow + wo, T(0));
            continue;
          }
          const T* srow = src_plane + iy * g.width;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = cmap[static_cast<std::size_t>(ox)];
            drow[ox] = ix < 0 ? T(0) : srow[ix];
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const AxisMaps& maps, const T* col, T* gx) {
  const std::int64_t ho = g.out_height();
  const std::int64_t wo = g.out_width();
  const std::int64_t plane = g.height * g.width;
  for (std::int64_t c = 0; c < g.in_channels; ++c) {
    T* dst_plane = gx + c * plane;
    for (std::int64_t ki = 0; ki < g.kernel_h; ++ki) {
      const auto& rmap = maps.rows[static_cast<std::size_t>(ki)];
      for (std::int64_t kj = 0; kj < g.kernel_w; ++kj) {
        const auto& cmap = maps.cols[static_cast<std::size_t>(kj)];
        const T* src = col + ((c * g.kernel_h + ki) * g.kernel_w + kj) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = rmap[static_cast<std::size_t>(oy)];
          if (iy < 0) continue;
          const T* srow = src + oy * wo;
          T* drow = dst_plane + iy * g.width;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = cmap[static_cast<std::size_t>(ox)];
            if (ix >= 0) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y, ConvWorkspace<T>* workspace) {
  const std::int64_t k = g.patch_size();
  const std::int64_t p = g.out_pixels();
  const std::int64_t in_sample = g.in_channels * g.height * g.width;
  const std::int64_t out_sample = g.out_channels * p;
  const bool pointwise = is_pointwise(g);
  const AxisMaps maps = pointwise ? AxisMaps{} : build_maps(g);

  if (workspace) workspace->columns.assign(pointwise ? 0 : static_cast<std::size_t>(g.batch), {});

  Eigen::Map<const RowMat<T>> w(weight.data(), g.out_channels, k);

#pragma omp parallel for schedule(static) if (g.batch > 1)
  for (std::int64_t n = 0; n < g.batch; ++n) {
    const T* xn = x.data() + n * in_sample;
    std::vector<T> local;
    const T* col = xn;
    if (!pointwise) {
      std::vector<T>& buf = workspace ? workspace->columns[static_cast<std::size_t>(n)] : local;
      buf.resize(static_cast<std::size_t>(k * p));
      im2col(g, maps, xn, buf.data());
      col = buf.data();
    }
    Eigen::Map<const RowMat<T>> c(col, k, p);
    Eigen::Map<RowMat<T>> out(y.data() + n * out_sample, g.out_channels, p);
    out.noalias() = w * c;
    if (!bias.empty()) {
      for (std::int64_t o = 0; o < g.out_channels; ++o) out.row(o).array() += bias[o];
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_y, const ConvWorkspace<T>* workspace,
                     std::span<T> grad_x, std::span<T> grad_w, std::span<T> grad_b) {
  const std::int64_t k = g.patch_size();
  const std::int64_t p = g.out_pixels();
  const std::int64_t in_sample = g.in_channels * g.height * g.width;
  const std::int64_t out_sample = g.out_channels * p;
  const bool pointwise = is_pointwise(g);
  const AxisMaps maps = pointwise ? AxisMaps{} : build_maps(g);
  const bool have_cols =
      workspace && static_cast<std::int64_t>(workspace->columns.size()) == g.batch;

  Eigen::Map<const RowMat<T>> w(weight.data(), g.out_channels, k);

  // Per-sample weight gradients, reduced in sample order afterwards so the
  // sum does not depend on the thread count.
  std::vector<std::vector<T>> partial_w(grad_w.empty() ? 0 : static_cast<std::size_t>(g.batch));

#pragma omp parallel for schedule(static) if (g.batch > 1)
  for (std::int64_t n = 0; n < g.batch; ++n) {
    Eigen::Map<const RowMat<T>> gy(grad_y.data() + n * out_sample, g.out_channels, p);
    const T* xn = x.data() + n * in_sample;

    if (!grad_w.empty()) {
      std::vector<T> local;
      const T* col = xn;
      if (!pointwise) {
        if (have_cols) {
          col = workspace->columns[static_cast<std::size_t>(n)].data();
        } else {
          local.resize(static_cast<std::size_t>(k * p));
          im2col(g, maps, xn, local.data());
          col = local.data();
        }
      }
      Eigen::Map<const RowMat<T>> c(col, k, p);
      auto& pw = partial_w[static_cast<std::size_t>(n)];
      pw.assign(static_cast<std::size_t>(g.out_channels * k), T(0));
      Eigen::Map<RowMat<T>> gw(pw.data(), g.out_channels, k);
      gw.noalias() = gy * c.transpose();
    }

    if (!grad_x.empty()) {
      T* gxn = grad_x.data() + n * in_sample;
      if (pointwise) {
        Eigen::Map<RowMat<T>> gx(gxn, k, p);
        gx.noalias() += w.transpose() * gy;
      } else {
        RowMat<T> gcol = w.transpose() * gy;
        col2im(g, maps, gcol.data(), gxn);
      }
    }
  }

  for (const auto& pw : partial_w) {
    for (std::size_t i = 0; i < pw.size(); ++i) grad_w[i] += pw[i];
  }
  if (!grad_b.empty()) {
    for (std::int64_t n = 0; n < g.batch; ++n) {
      const T* gyn = grad_y.data() + n * out_sample;
      for (std::int64_t o = 0; o < g.out_channels; ++o) {
        T s = 0;
        for (std::int64_t i = 0; i < p; ++i) s += gyn[o * p + i];
        grad_b[o] += s;
      }
    }
  }
}

namespace reference {

namespace {

// Input value at (possibly out-of-range) coordinates under the padding rule.
template <typename T>
T sample(const ConvGeometry& g, const T* plane, std::int64_t iy, std::int64_t ix,
         std::int64_t* fy, std::int64_t* fx) {
  if (iy < 0 || iy >= g.height || ix < 0 || ix >= g.width) {
    if (g.pad_mode == PadMode::zero) {
      *fy = -1;
      return T(0);
    }
    iy = reflect_index(iy, g.height);
    ix = reflect_index(ix, g.width);
  }
  *fy = iy;
  *fx = ix;
  return plane[iy * g.width + ix];
}

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y) {
  const std::int64_t ho = g.out_height();
  const std::int64_t wo = g.out_width();
  for (std::int64_t n = 0; n < g.batch; ++n) {
    for (std::int64_t o = 0; o < g.out_channels; ++o) {
      for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          double acc = bias.empty() ? 0.0 : static_cast<double>(bias[o]);
          for (std::int64_t c = 0; c < g.in_channels; ++c) {
            const T* plane = x.data() + (n * g.in_channels + c) * g.height * g.width;
            for (std::int64_t ki = 0; ki < g.kernel_h; ++ki) {
              for (std::int64_t kj = 0; kj < g.kernel_w; ++kj) {
                std::int64_t fy = 0, fx = 0;
                const T v = sample(g, plane, oy * g.stride + ki - g.padding,
                                   ox * g.stride + kj - g.padding, &fy, &fx);
                const T wv = weight[((o * g.in_channels + c) * g.kernel_h + ki) * g.kernel_w + kj];
                acc += static_cast<double>(v) * static_cast<double>(wv);
              }
            }
          }
          y[((n * g.out_channels + o) * ho + oy) * wo + ox] = static_cast<T>(acc);
        }
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_y, std::span<T> grad_x, std::span<T> grad_w,
                     std::span<T> grad_b) {
  const std::int64_t ho = g.out_height();
  const std::int64_t wo = g.out_width();
  for (std::int64_t n = 0; n < g.batch; ++n) {
    for (std::int64_t o = 0; o < g.out_channels; ++o) {
      for (std::int64_t oy = 0; oy < ho; ++oy) {
        for (std::int64_t ox = 0; ox < wo; ++ox) {
          const T gy = grad_y[((n * g.out_channels + o) * ho + oy) * wo + ox];
          if (!grad_b.empty()) grad_b[o] += gy;
          for (std::int64_t c = 0; c < g.in_channels; ++c) {
            const std::int64_t plane_off = (n * g.in_channels + c) * g.height * g.width;
            for (std::int64_t ki = 0; ki < g.kernel_h; ++ki) {
              for (std::int64_t kj = 0; kj < g.kernel_w; ++kj) {
                std::int64_t fy = 0, fx = 0;
                const T v = sample(g, x.data() + plane_off, oy * g.stride + ki - g.padding,
                                   ox * g.stride + kj - g.padding, &fy, &fx);
                const std::int64_t widx =
                    ((o * g.in_channels + c) * g.kernel_h + ki) * g.kernel_w + kj;
                if (!grad_w.empty()) grad_w[widx] += gy * v;
                if (!grad_x.empty() && fy >= 0) {
                  grad_x[plane_off + fy * g.width + fx] += gy * weight[widx];
                }
              }
            }
          }
        }
      }
    }
  }
}

template void conv2d_forward<float>(const ConvGeometry&, std::span<const float>,
                                    std::span<const float>, std::span<const float>,
                                    std::span<float>);
template void conv2d_forward<double>(const ConvGeometry&, std::span<const double>,
                                     std::span<const double>, std::span<const double>,
                                     std::span<double>);
template void conv2d_backward<float>(const ConvGeometry&, std::span<const float>,
                                     std::span<const float>, std::span<const float>,
                                     std::span<float>, std::span<float>, std::span<float>);
template void conv2d_backward<double>(const ConvGeometry&, std::span<const double>,
                                      std::span<const double>, std::span<const double>,
                                      std::span<double>, std::span<double>, std::span<double>);

}  // namespace reference

template void conv2d_forward<float>(const ConvGeometry&, std::span<const float>,
                                    std::span<const float>, std::span<const float>,
                                    std::span<float>, ConvWorkspace<float>*);
template void conv2d_forward<double>(const ConvGeometry&, std::span<const double>,
                                     std::span<const double>, std::span<const double>,
                                     std::span<double>, ConvWorkspace<double>*);
template void conv2d_backward<float>(const ConvGeometry&, std::span<const float>,
                                     std::span<const float>, std::span<const float>,
                                     const ConvWorkspace<float>*, std::span<float>,
                                     std::span<float>, std::span<float>);
template void conv2d_backward<double>(const ConvGeometry&, std::span<const double>,
                                      std::span<const double>, std::span<const double>,
                                      const ConvWorkspace<double>*, std::span<double>,
                                      std::span<double>, std::span<double>);

}  // namespace skydepth::kernels
