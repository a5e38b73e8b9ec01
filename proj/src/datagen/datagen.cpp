#include "skydepth/datagen.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "skydepth/kernels/conv2d.hpp"

namespace skydepth::datagen {

void ClassBins::validate() const {
  if (upper_edges_m.empty()) throw ValueError("class bins: no edges");
  for (std::size_t i = 1; i < upper_edges_m.size(); ++i) {
    if (!(upper_edges_m[i] > upper_edges_m[i - 1])) {
      throw ValueError("class bins: edges must be strictly increasing");
    }
  }
}

int bin_distance(double distance_m, const ClassBins& bins) {
  if (!std::isfinite(distance_m)) throw ValueError("bin_distance: distance is not finite");
  if (distance_m < 0.0) {
    throw ValueError("bin_distance: negative distance " + std::to_string(distance_m));
  }
  for (std::size_t i = 0; i < bins.upper_edges_m.size(); ++i) {
    if (distance_m < bins.upper_edges_m[i]) return static_cast<int>(i);
  }
  if (!bins.upper_edges_m.empty() && distance_m == bins.upper_edges_m.back()) {
    return static_cast<int>(bins.upper_edges_m.size()) - 1;
  }
  return bins.background_class;
}

DepthMask build_mask(const AnnotatedFrame& frame, int height, int width, const ClassBins& bins) {
  const BBox box = clip_to(frame.bbox, width, height);
  if (frame.bbox.w <= 0 || frame.bbox.h <= 0 || box.w == 0 || box.h == 0) {
    throw ValueError("build_mask: bbox of frame '" + frame.frame_id + "' lies outside the " +
                     std::to_string(width) + "x" + std::to_string(height) + " image");
  }
  const int cls = bin_distance(frame.distance_m, bins);
  DepthMask mask(height, width, static_cast<float>(bins.background_class));
  for (int y = box.y; y < box.bottom(); ++y) {
    for (int x = box.x; x < box.right(); ++x) mask.at(y, x) = static_cast<float>(cls);
  }
  return mask;
}

BBox crop_window(const BBox& box, int width, int height, int crop) {
  if (crop <= 0) throw ValueError("center_crop: crop size must be positive");
  if (crop > width || crop > height) {
    throw ValueError("center_crop: crop " + std::to_string(crop) + " exceeds image " +
                     std::to_string(width) + "x" + std::to_string(height));
  }
  const int cx = box.x + box.w / 2;
  const int cy = box.y + box.h / 2;
  const int left = std::clamp(cx - crop / 2, 0, width - crop);
  const int top = std::clamp(cy - crop / 2, 0, height - crop);
  return BBox{left, top, crop, crop};
}

CropResult center_crop(const ImageTensor& image, const DepthMask& mask, const BBox& box, int crop) {
  if (image.height() != mask.height() || image.width() != mask.width()) {
    throw ShapeError("center_crop: image and mask extents differ");
  }
  const BBox win = crop_window(box, image.width(), image.height(), crop);
  CropResult out{ImageTensor(image.channels(), crop, crop), DepthMask(crop, crop), {}, win};
  for (int c = 0; c < image.channels(); ++c) {
    for (int y = 0; y < crop; ++y) {
      for (int x = 0; x < crop; ++x) out.image.at(c, y, x) = image.at(c, win.y + y, win.x + x);
    }
  }
  for (int y = 0; y < crop; ++y) {
    for (int x = 0; x < crop; ++x) out.mask.at(y, x) = mask.at(win.y + y, win.x + x);
  }
  out.bbox = clip_to(BBox{box.x - win.x, box.y - win.y, box.w, box.h}, crop, crop);
  return out;
}

std::vector<double> gaussian_kernel(double sigma, int ksize) {
  if (!(sigma > 0.0)) throw ValueError("gaussian_smooth: sigma must be positive");
  if (ksize <= 0 || ksize % 2 == 0) {
    throw ValueError("gaussian_smooth: kernel size must be odd and positive, got " +
                     std::to_string(ksize));
  }
  const int r = ksize / 2;
  std::vector<double> taps(static_cast<std::size_t>(ksize));
  double total = 0.0;
  for (int i = -r; i <= r; ++i) {
    taps[static_cast<std::size_t>(i + r)] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    total += taps[static_cast<std::size_t>(i + r)];
  }
  for (double& t : taps) t /= total;
  return taps;
}

DepthMask gaussian_smooth(const DepthMask& mask, double sigma, int ksize) {
  const std::vector<double> taps = gaussian_kernel(sigma, ksize);
  const int r = ksize / 2;
  const int h = mask.height();
  const int w = mask.width();
  std::vector<double> rows(static_cast<std::size_t>(h) * w);

#pragma omp parallel for schedule(static) if (h * w > 65536)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const auto sx = kernels::reflect_index(x + i, w);
        acc += taps[static_cast<std::size_t>(i + r)] * mask.at(y, static_cast<int>(sx));
      }
      rows[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }

  DepthMask out(h, w);
#pragma omp parallel for schedule(static) if (h * w > 65536)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const auto sy = kernels::reflect_index(y + i, h);
        acc += taps[static_cast<std::size_t>(i + r)] * rows[static_cast<std::size_t>(sy) * w + x];
      }
      out.at(y, x) = static_cast<float>(acc);
    }
  }
  return out;
}

void SynthParams::validate() const {
  if (!(focal_px > 0.0)) throw ValueError("synth: focal_px must be positive");
  if (!(wingspan_m > 0.0)) throw ValueError("synth: wingspan_m must be positive");
  if (image_size < 8) throw ValueError("synth: image_size must be at least 8");
  if (!(min_distance_m > 0.0) || !(max_distance_m >= min_distance_m) ||
      !std::isfinite(max_distance_m)) {
    throw ValueError("synth: distance range must satisfy 0 < min <= max < inf");
  }
  if (!(noise_std >= 0.0)) throw ValueError("synth: noise_std must be non-negative");
  if (!(aspect > 0.0 && aspect <= 1.0)) throw ValueError("synth: aspect must lie in (0, 1]");
}

double apparent_size_px(const SynthParams& params, double distance_m) {
  return params.focal_px * params.wingspan_m / distance_m;
}

std::mt19937_64 frame_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

SynthScene synth_scene(const SynthParams& params, std::mt19937_64& rng) {
  params.validate();
  const int n = params.image_size;
  std::uniform_real_distribution<double> distance_dist(params.min_distance_m,
                                                       params.max_distance_m);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  for (int attempt = 0; attempt < 100; ++attempt) {
    const double d = distance_dist(rng);
    const double size = apparent_size_px(params, d);
    const double a = 0.5 * size;
    const double b = a * params.aspect;
    if (size < 2.0 || size > n - 2 || 2.0 * b > n - 2) continue;

    const double top_luma = 0.65 + 0.25 * unit(rng);
    const double falloff = 0.10 + 0.15 * unit(rng);
    const double tone = 0.05 + 0.25 * unit(rng);
    const double cx = a + (n - 2.0 * a) * unit(rng);
    const double cy = b + (n - 2.0 * b) * unit(rng);

    ImageTensor image(1, n, n);
    int x0 = n, y0 = n, x1 = -1, y1 = -1;
    for (int y = 0; y < n; ++y) {
      const double sky = top_luma - falloff * y / (n - 1.0);
      const double dy = (y + 0.5 - cy) / b;
      for (int x = 0; x < n; ++x) {
        const double dx = (x + 0.5 - cx) / a;
        const bool inside = dx * dx + dy * dy <= 1.0;
        if (inside) {
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
        }
        image.at(0, y, x) = static_cast<float>(inside ? tone : sky);
      }
    }
    if (x1 < 0) continue;  // too thin to cover any pixel centre

    std::normal_distribution<double> noise(0.0, params.noise_std > 0 ? params.noise_std : 1.0);
    for (float& v : image.data()) {
      const double noisy = params.noise_std > 0 ? v + noise(rng) : v;
      v = static_cast<float>(std::round(std::clamp(noisy, 0.0, 1.0) * 255.0) / 255.0);
    }

    SynthScene scene{std::move(image), {}};
    scene.frame.bbox = BBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    scene.frame.distance_m = d;
    return scene;
  }
  throw ValueError("synth: could not draw a distance with a visible silhouette in 100 attempts");
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

[[noreturn]] void manifest_error(const std::filesystem::path& path, std::size_t line,
                                 const std::string& field, const std::string& what) {
  throw IoError(path.string() + ":" + std::to_string(line) + ": field '" + field + "': " + what);
}

int parse_int(std::string_view s, const std::filesystem::path& path, std::size_t line,
              const char* field) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    manifest_error(path, line, field, "expected an integer, got '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

std::vector<AnnotatedFrame> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::vector<AnnotatedFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (;;) {
      const auto tab = rest.find('\t');
      fields.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (fields.size() != 7) {
      manifest_error(path, line_no, "record",
                     "expected 7 tab-separated fields, got " + std::to_string(fields.size()));
    }

    AnnotatedFrame f;
    f.frame_id = std::string(fields[0]);
    if (f.frame_id.empty()) manifest_error(path, line_no, "frame_id", "empty");
    f.image_path = std::string(fields[1]);
    if (f.image_path.empty()) manifest_error(path, line_no, "image_path", "empty");
    f.bbox.x = parse_int(fields[2], path, line_no, "x");
    f.bbox.y = parse_int(fields[3], path, line_no, "y");
    f.bbox.w = parse_int(fields[4], path, line_no, "w");
    f.bbox.h = parse_int(fields[5], path, line_no, "h");
    if (f.bbox.w <= 0) manifest_error(path, line_no, "w", "must be positive");
    if (f.bbox.h <= 0) manifest_error(path, line_no, "h", "must be positive");

    const std::string_view ds = fields[6];
    const auto res = std::from_chars(ds.data(), ds.data() + ds.size(), f.distance_m);
    if (res.ec != std::errc() || res.ptr != ds.data() + ds.size()) {
      manifest_error(path, line_no, "distance_m", "expected a number, got '" + std::string(ds) + "'");
    }
    if (!std::isfinite(f.distance_m)) manifest_error(path, line_no, "distance_m", "not finite");
    if (f.distance_m < 0.0) manifest_error(path, line_no, "distance_m", "negative distance");
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_manifest(const std::vector<AnnotatedFrame>& frames, const std::filesystem::path& path) {
  std::ostringstream os;
  for (const auto& f : frames) {
    if (f.frame_id.find_first_of("\t\n") != std::string::npos ||
        f.image_path.find_first_of("\t\n") != std::string::npos) {
      throw ValueError("write_manifest: frame '" + f.frame_id + "' contains a tab or newline");
    }
    os << f.frame_id << '\t' << f.image_path << '\t' << f.bbox.x << '\t' << f.bbox.y << '\t'
       << f.bbox.w << '\t' << f.bbox.h << '\t' << format_double(f.distance_m) << '\n';
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  const std::string text = os.str();
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing manifest " + path.string());
}

std::filesystem::path resolve_image_path(const std::filesystem::path& manifest,
                                         const AnnotatedFrame& frame) {
  const std::filesystem::path p(frame.image_path);
  if (p.is_absolute()) return p;
  return manifest.parent_path() / p;
}

}  // namespace skydepth::datagen
