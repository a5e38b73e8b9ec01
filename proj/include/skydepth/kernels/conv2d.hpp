#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace skydepth::kernels {

enum class PadMode : std::uint8_t { zero, reflect };

/// Mirror index into [0, n) without repeating the edge sample
/// (d c b | a b c d | c b a). Works for any offset, including ones that
/// need several reflections.
inline std::int64_t reflect_index(std::int64_t i, std::int64_t n) {
  if (n == 1) return 0;
  const std::int64_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

struct ConvGeometry {
  std::int64_t batch = 1;
  std::int64_t in_channels = 1;
  std::int64_t height = 1;
  std::int64_t width = 1;
  std::int64_t out_channels = 1;
  std::int64_t kernel_h = 1;
  std::int64_t kernel_w = 1;
  std::int64_t stride = 1;
  std::int64_t padding = 0;
  PadMode pad_mode = PadMode::zero;

  std::int64_t out_height() const { return (height + 2 * padding - kernel_h) / stride + 1; }
  std::int64_t out_width() const { return (width + 2 * padding - kernel_w) / stride + 1; }
  std::int64_t patch_size() const { return in_channels * kernel_h * kernel_w; }
  std::int64_t out_pixels() const { return out_height() * out_width(); }
};

/// Saved per-sample im2col matrices; filled by the forward pass and reused
/// by the backward pass.
template <typename T>
struct ConvWorkspace {
  std::vector<std::vector<T>> columns;
};

/// Cross-correlation y = w * x + b via im2col and a GEMM per sample.
/// `bias` may be empty. Samples run in parallel; each output element is
/// produced by the same instruction sequence whatever the thread count.
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y, ConvWorkspace<T>* workspace);

/// Accumulates (+=) into grad_x / grad_w / grad_b; any of them may be empty
/// to skip. Reuses the workspace from conv2d_forward when given.
template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_y, const ConvWorkspace<T>* workspace,
                     std::span<T> grad_x, std::span<T> grad_w, std::span<T> grad_b);

namespace reference {

/// Direct quadruple-loop convolution. Slow; kept as the test oracle and the
/// benchmark baseline.
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                    std::span<const T> bias, std::span<T> y);

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> x, std::span<const T> weight,
                     std::span<const T> grad_y, std::span<T> grad_x, std::span<T> grad_w,
                     std::span<T> grad_b);

}  // namespace reference

}  // namespace skydepth::kernels
