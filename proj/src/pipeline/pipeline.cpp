#include "skydepth/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "skydepth/io.hpp"
#include "skydepth/numcore/graph.hpp"

namespace skydepth::pipeline {

namespace nc = numcore;

namespace {

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "f%06d", index);
  return buf;
}

}  // namespace

ImageTensor to_gray(const ImageTensor& image) {
  if (image.channels() == 1) return image;
  ImageTensor gray(1, image.height(), image.width());
  const float inv = 1.0f / static_cast<float>(image.channels());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      float s = 0.0f;
      for (int c = 0; c < image.channels(); ++c) s += image.at(c, y, x);
      gray.at(0, y, x) = s * inv;
    }
  }
  return gray;
}

void PrepConfig::validate() const {
  if (crop <= 0) throw ValueError("prep: crop must be positive");
  if (!(sigma > 0.0)) throw ValueError("prep: sigma must be positive");
  if (ksize <= 0 || ksize % 2 == 0) throw ValueError("prep: ksize must be odd and positive");
  bins.validate();
}

Sample prepare_sample(const AnnotatedFrame& frame, const ImageTensor& image,
                      const PrepConfig& cfg) {
  const DepthMask full = datagen::build_mask(frame, image.height(), image.width(), cfg.bins);
  datagen::CropResult crop = datagen::center_crop(to_gray(image), full, frame.bbox, cfg.crop);
  Sample s;
  s.frame = frame;
  s.frame.bbox = crop.bbox;
  s.window = crop.window;
  s.image = std::move(crop.image);
  s.target = datagen::gaussian_smooth(crop.mask, cfg.sigma, cfg.ksize);
  s.gt_mask = std::move(crop.mask);
  s.gt_class = datagen::bin_distance(frame.distance_m, cfg.bins);
  return s;
}

std::vector<Sample> load_samples(const std::filesystem::path& manifest, const PrepConfig& cfg,
                                 int workers) {
  cfg.validate();
  const auto frames = datagen::load_manifest(manifest);
  std::vector<Sample> out(frames.size());
  std::vector<std::string> errors(frames.size());
  const int n = static_cast<int>(frames.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (int i = 0; i < n; ++i) {
    try {
      const auto image = io::read_image(datagen::resolve_image_path(manifest, frames[i]));
      out[i] = prepare_sample(frames[i], image, cfg);
    } catch (const std::exception& e) {
      errors[i] = "frame '" + frames[i].frame_id + "': " + e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw IoError(e);
  }
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ValueError("train: epochs must be non-negative");
  weights.validate();
  ssim.validate();
  if (!(c_frac > 0.0)) throw ValueError("train: c_frac must be positive");
  if (!(base_lr > 0.0)) throw ValueError("train: learning rate must be positive");
}

TrainResult train(const std::vector<Sample>& samples, const model::ModelConfig& model_cfg,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  model_cfg.validate();
  if (samples.empty() && cfg.epochs > 0) throw ValueError("train: no samples");

  TrainResult result{model::unet_init(model_cfg), {}, {}};
  const auto& params = result.model.params();
  result.optimizer = optim::AdamState::zeros_like(params);
  result.model.set_requires_grad(true);

  const auto sched = optim::WarmupSchedule::for_dataset(samples.size(), cfg.base_lr);
  std::seed_seq shuffle_seq{static_cast<std::uint32_t>(cfg.seed),
                            static_cast<std::uint32_t>(cfg.seed >> 32), 0x5u};
  std::mt19937_64 shuffle_rng(shuffle_seq);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::int64_t iteration = 0;
  nc::Graph graph;
  nc::GraphScope scope(graph);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    EpochLog log;
    log.epoch = epoch;
    log.lr_mult = optim::warmup_multiplier(iteration, sched);
    double loss_sum = 0.0;
    for (std::size_t idx : order) {
      const Sample& s = samples[idx];
      result.model.zero_grad();
      const auto image = to_tensor(s.image);
      const auto pred = model::unet_forward(result.model, image);
      const auto loss = losses::combined_loss(pred, to_tensor(s.target), image, cfg.weights,
                                              cfg.ssim, cfg.c_frac);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        graph.clear();
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           " on frame '" + s.frame.frame_id + "'");
      }
      nc::backward(graph, loss);
      const double lr = cfg.base_lr * optim::warmup_multiplier(iteration, sched);
      optim::adam_step(params, result.optimizer, lr, cfg.adam);
      loss_sum += value;
      ++iteration;
    }
    log.loss = samples.empty() ? 0.0 : loss_sum / static_cast<double>(samples.size());
    log.l2_penalty = optim::l2_penalty(params, cfg.adam.weight_decay);
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  result.model.zero_grad();
  result.model.set_requires_grad(false);
  return result;
}

std::vector<DepthMask> predict_all(const model::Model& model, const std::vector<Sample>& samples,
                                   int workers) {
  std::vector<DepthMask> out(samples.size());
  const int n = static_cast<int>(samples.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (int i = 0; i < n; ++i) out[i] = model::predict(model, samples[i].image);
  return out;
}

metrics::MetricReport score(const std::vector<DepthMask>& predictions,
                            const std::vector<Sample>& samples, const metrics::EvalConfig& cfg) {
  if (predictions.size() != samples.size()) {
    throw ValueError("score: " + std::to_string(predictions.size()) + " predictions for " +
                     std::to_string(samples.size()) + " samples");
  }
  std::vector<metrics::EvalSample> eval;
  eval.reserve(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    eval.push_back({predictions[i], samples[i].frame, samples[i].gt_class, samples[i].gt_mask});
  }
  return metrics::evaluate(eval, cfg);
}

std::string format_summary(const SynthSummary& s) {
  std::string out = "frames=" + std::to_string(s.frames) + " classes={";
  for (std::size_t c = 0; c < s.classes.size(); ++c) {
    if (c) out += ",";
    out += std::to_string(c) + ":" + std::to_string(s.classes[c]);
  }
  return out + "}";
}

SynthSummary synth_dataset(const datagen::SynthParams& params, int frames,
                           const std::filesystem::path& out_dir, int workers) {
  params.validate();
  if (frames < 0) throw ValueError("synth: frame count must be non-negative");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (!ec) fs::create_directories(out_dir / "masks", ec);
  if (ec) throw IoError("synth: cannot create " + out_dir.string() + ": " + ec.message());

  const datagen::ClassBins bins;
  std::vector<AnnotatedFrame> annotations(static_cast<std::size_t>(frames));
  std::vector<std::string> errors(static_cast<std::size_t>(frames));
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, workers))
  for (int i = 0; i < frames; ++i) {
    try {
      auto rng = datagen::frame_rng(params.seed, static_cast<std::uint64_t>(i));
      datagen::SynthScene scene = datagen::synth_scene(params, rng);
      const std::string name = frame_name(i);
      scene.frame.frame_id = name;
      scene.frame.image_path = "images/" + name + ".pgm";
      io::write_image(scene.image, out_dir / scene.frame.image_path);
      io::write_class_mask(
          datagen::build_mask(scene.frame, scene.image.height(), scene.image.width(), bins),
          out_dir / "masks" / (name + ".pgm"));
      annotations[i] = scene.frame;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw IoError("synth: " + e);
  }
  datagen::write_manifest(annotations, out_dir / "manifest.tsv");

  SynthSummary summary;
  summary.frames = frames;
  for (const auto& f : annotations) ++summary.classes[datagen::bin_distance(f.distance_m, bins)];
  return summary;
}

}  // namespace skydepth::pipeline
