#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "skydepth/metrics.hpp"
#include "skydepth/model.hpp"
#include "skydepth/optim.hpp"
#include "skydepth/types.hpp"

namespace skydepth::io {

/// Binary portable graymap (P5, 1 channel) or pixmap (P6, 3 channels),
/// maxval 255. Samples are scaled to [0, 1]; P6 is de-interleaved into
/// planar R, G, B channels.
ImageTensor read_image(const std::filesystem::path& path);

/// Writes P5 for 1 channel, P6 for 3. Values are clamped to [0, 1] and
/// rounded to the nearest 1/255.
void write_image(const ImageTensor& image, const std::filesystem::path& path);

/// Grayscale float map "Pf", scale -1.0 (little-endian), rows bottom-up.
DepthMask read_float_map(const std::filesystem::path& path);
void write_float_map(const DepthMask& mask, const std::filesystem::path& path);

/// Integer class mask stored as P5 with value = class * 50.
void write_class_mask(const DepthMask& mask, const std::filesystem::path& path);
DepthMask read_class_mask(const std::filesystem::path& path);

struct Checkpoint {
  model::Model model;
  std::optional<optim::AdamState> optimizer;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Little-endian layout, see docs/formats.md.
void save_checkpoint(const model::Model& model, const optim::AdamState* optimizer,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Header line "mae,rmse,sw_mean,sw_min,sw_max,thr_acc,n" plus one row.
std::string format_metric_report(const metrics::MetricReport& report);
void write_metric_report(const metrics::MetricReport& report, const std::filesystem::path& path);

/// Whole-file helpers shared by the readers and writers.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace skydepth::io
