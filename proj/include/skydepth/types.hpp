#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "skydepth/error.hpp"
#include "skydepth/numcore/tensor.hpp"

namespace skydepth {

/// Axis-aligned box in pixels; (x, y) is the top-left corner.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  int right() const { return x + w; }    // exclusive
  int bottom() const { return y + h; }   // exclusive
  bool operator==(const BBox&) const = default;
};

/// Intersection of `box` with [0, width) x [0, height); w or h is 0 when
/// they do not overlap.
inline BBox clip_to(const BBox& box, int width, int height) {
  BBox out;
  out.x = box.x < 0 ? 0 : box.x;
  out.y = box.y < 0 ? 0 : box.y;
  const int r = box.right() > width ? width : box.right();
  const int b = box.bottom() > height ? height : box.bottom();
  out.w = r > out.x ? r - out.x : 0;
  out.h = b > out.y ? b - out.y : 0;
  return out;
}

/// C x H x W image, channel-major (planar), values nominally in [0, 1].
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int channels, int height, int width, float fill = 0.0f)
      : channels_(channels), height_(height), width_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {
    if (channels <= 0 || height <= 0 || width <= 0) {
      throw ShapeError("image: extents must be positive");
    }
  }
  ImageTensor(int channels, int height, int width, std::vector<float> data)
      : ImageTensor(channels, height, width) {
    if (data.size() != data_.size()) throw ShapeError("image: data size does not match extents");
    data_ = std::move(data);
  }

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }

  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
  }

  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

/// H x W map in class units: ground-truth masks hold integers 0..4,
/// predictions are continuous.
class DepthMask {
 public:
  DepthMask() = default;
  DepthMask(int height, int width, float fill = 0.0f)
      : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, fill) {
    if (height <= 0 || width <= 0) throw ShapeError("mask: extents must be positive");
  }
  DepthMask(int height, int width, std::vector<float> data) : DepthMask(height, width) {
    if (data.size() != data_.size()) throw ShapeError("mask: data size does not match extents");
    data_ = std::move(data);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  float& at(int y, int x) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  float at(int y, int x) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool operator==(const DepthMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

struct AnnotatedFrame {
  std::string frame_id;
  std::string image_path;
  BBox bbox;
  double distance_m = 0.0;

  bool operator==(const AnnotatedFrame&) const = default;
};

/// 1 x C x H x W tensor view of an image.
inline numcore::Tensor to_tensor(const ImageTensor& image) {
  return numcore::Tensor({1, image.channels(), image.height(), image.width()}, image.data());
}

/// 1 x 1 x H x W tensor view of a mask.
inline numcore::Tensor to_tensor(const DepthMask& mask) {
  return numcore::Tensor({1, 1, mask.height(), mask.width()}, mask.data());
}

/// Inverse of to_tensor(DepthMask); the tensor must be 1 x 1 x H x W.
inline DepthMask mask_from_tensor(const numcore::Tensor& t) {
  if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != 1) {
    throw ShapeError("mask_from_tensor: expected 1x1xHxW, got " + numcore::to_string(t.shape()));
  }
  return DepthMask(static_cast<int>(t.dim(2)), static_cast<int>(t.dim(3)),
                   std::vector<float>(t.data().begin(), t.data().end()));
}

}  // namespace skydepth
