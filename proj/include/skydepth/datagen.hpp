#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <vector>

#include "skydepth/types.hpp"

namespace skydepth::datagen {

/// Ordinal distance classes. Class i holds distances d < upper_edges_m[i]
/// not captured by a lower class. A distance exactly on the last edge stays
/// in the last object class; anything beyond it is background_class.
struct ClassBins {
  std::vector<double> upper_edges_m{200.0, 400.0, 600.0, 700.0};
  int background_class = 4;

  int num_classes() const { return static_cast<int>(upper_edges_m.size()) + 1; }
  void validate() const;
};

/// Smallest i with d < upper_edges_m[i]; d equal to the last edge gives the
/// last object class; larger d gives the background class.
/// Throws ValueError for negative or non-finite distances.
int bin_distance(double distance_m, const ClassBins& bins = {});

/// Background everywhere, bin_distance(frame.distance_m) inside the bbox
/// (clipped to the image). Throws ValueError if the bbox misses the image.
DepthMask build_mask(const AnnotatedFrame& frame, int height, int width,
                     const ClassBins& bins = {});

/// crop x crop window centred on the bbox centre, shifted (never shrunk)
/// to stay inside a width x height image.
BBox crop_window(const BBox& box, int width, int height, int crop);

struct CropResult {
  ImageTensor image;
  DepthMask mask;
  BBox bbox;    // in crop coordinates, clipped to the crop
  BBox window;  // crop window in source coordinates
};

CropResult center_crop(const ImageTensor& image, const DepthMask& mask, const BBox& box, int crop);

/// Normalised 1-D Gaussian taps. ksize must be odd and sigma positive.
std::vector<double> gaussian_kernel(double sigma, int ksize);

/// Separable Gaussian blur with reflect padding.
DepthMask gaussian_smooth(const DepthMask& mask, double sigma, int ksize);

struct SynthParams {
  double focal_px = 1200.0;
  double wingspan_m = 12.0;
  int image_size = 512;
  double min_distance_m = 50.0;
  double max_distance_m = 900.0;
  double noise_std = 0.02;
  double aspect = 0.4;  // silhouette height / width
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthScene {
  ImageTensor image;      // 1 channel, quantised to multiples of 1/255
  AnnotatedFrame frame;   // frame_id and image_path left empty
};

/// Apparent silhouette width in pixels under the pinhole model.
double apparent_size_px(const SynthParams& params, double distance_m);

/// One grayscale sky scene with a dark elliptical silhouette. Deterministic
/// in the generator state.
SynthScene synth_scene(const SynthParams& params, std::mt19937_64& rng);

/// Generator for frame `index` of a dataset seeded with `seed`. Frames are
/// independent of each other, so output does not depend on how the work is
/// split across workers.
std::mt19937_64 frame_rng(std::uint64_t seed, std::uint64_t index);

/// Tab-separated records: frame_id, image_path, x, y, w, h, distance_m.
std::vector<AnnotatedFrame> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<AnnotatedFrame>& frames, const std::filesystem::path& path);

/// Image paths in a manifest are relative to the manifest's directory
/// unless absolute.
std::filesystem::path resolve_image_path(const std::filesystem::path& manifest,
                                         const AnnotatedFrame& frame);

}  // namespace skydepth::datagen
