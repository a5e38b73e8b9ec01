#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "skydepth/datagen.hpp"
#include "skydepth/losses.hpp"
#include "skydepth/metrics.hpp"
#include "skydepth/model.hpp"
#include "skydepth/optim.hpp"

namespace skydepth::pipeline {

struct PrepConfig {
  int crop = 128;
  double sigma = 2.0;
  int ksize = 9;
  datagen::ClassBins bins;

  void validate() const;
};

/// Channel average; single-channel images are returned unchanged.
ImageTensor to_gray(const ImageTensor& image);

/// One training or evaluation crop.
struct Sample {
  AnnotatedFrame frame;  // bbox clipped and expressed in crop coordinates
  BBox window;           // crop window in full-image coordinates
  ImageTensor image;     // crop x crop, single channel
  DepthMask target;      // smoothed class mask used as the regression target
  DepthMask gt_mask;     // unsmoothed class mask
  int gt_class = 0;
};

Sample prepare_sample(const AnnotatedFrame& frame, const ImageTensor& image,
                      const PrepConfig& cfg);

/// Loads every image named in the manifest and prepares its crop. Samples
/// keep manifest order regardless of `workers`.
std::vector<Sample> load_samples(const std::filesystem::path& manifest, const PrepConfig& cfg,
                                 int workers = 1);

struct TrainConfig {
  int epochs = 20;
  losses::LossWeights weights;
  losses::SsimConfig ssim;
  double c_frac = 0.2;
  double base_lr = 1e-3;
  optim::AdamConfig adam;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;      // mean combined loss over the epoch
  double lr_mult = 0.0;   // warmup multiplier at the epoch's first iteration
  double l2_penalty = 0.0;
};

struct TrainResult {
  model::Model model;
  optim::AdamState optimizer;
  std::vector<EpochLog> log;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Batch-size-1 training with a per-epoch shuffle drawn from `cfg.seed`.
/// Throws NumericError naming the frame when the loss becomes non-finite.
TrainResult train(const std::vector<Sample>& samples, const model::ModelConfig& model_cfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

std::vector<DepthMask> predict_all(const model::Model& model, const std::vector<Sample>& samples,
                                   int workers = 1);

/// Metrics of `predictions[i]` against `samples[i]`.
metrics::MetricReport score(const std::vector<DepthMask>& predictions,
                            const std::vector<Sample>& samples, const metrics::EvalConfig& cfg);

struct SynthSummary {
  int frames = 0;
  std::array<int, 5> classes{};
};

/// "frames=N classes={0:a,1:b,2:c,3:d,4:e}"
std::string format_summary(const SynthSummary& summary);

/// Writes images/fNNNNNN.pgm, masks/fNNNNNN.pgm and manifest.tsv under
/// `out_dir`. Frame i is drawn from frame_rng(params.seed, i).
SynthSummary synth_dataset(const datagen::SynthParams& params, int frames,
                           const std::filesystem::path& out_dir, int workers = 1);

}  // namespace skydepth::pipeline
