#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "skydepth/gradcheck.hpp"
#include "skydepth/io.hpp"
#include "skydepth/pipeline.hpp"

namespace fs = std::filesystem;
using namespace skydepth;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Raised for invalid flag combinations discovered after parsing.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// `key = value` lines become `--key=value` arguments placed ahead of the
// real command line, so explicit flags (parsed later, last value wins)
// override the file.
std::vector<std::string> config_arguments(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path.string());
  std::vector<std::string> args;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    if (key.empty() || key == "config") {
      throw UsageError(path.string() + ":" + std::to_string(line_no) + ": invalid key '" + key +
                       "'");
    }
    args.push_back("--" + key + "=" + value);
  }
  return args;
}

// argv with any `--config FILE` expanded in front of the subcommand's own
// arguments. Returned in reverse order, as CLI11 expects for vectors.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<fs::path> config;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      config = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    }
  }
  if (config) {
    static const std::array<std::string, 5> commands{"synth", "train", "eval", "infer",
                                                     "gradcheck"};
    const auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) {
      return std::find(commands.begin(), commands.end(), a) != commands.end();
    });
    if (sub != args.end()) {
      const auto extra = config_arguments(*config);
      args.insert(sub + 1, extra.begin(), extra.end());
    }
  }
  std::reverse(args.begin(), args.end());
  return args;
}

template <std::size_t N>
std::array<double, N> parse_list(const std::string& text, const char* what) {
  std::array<double, N> out{};
  std::stringstream ss(text);
  std::string item;
  std::size_t i = 0;
  while (std::getline(ss, item, ',')) {
    if (i >= N) break;
    try {
      std::size_t used = 0;
      out[i] = std::stod(trim(item), &used);
      if (used != trim(item).size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(std::string(what) + ": cannot parse '" + item + "'");
    }
    ++i;
  }
  if (i != N || std::getline(ss, item, ',')) {
    throw UsageError(std::string(what) + ": expected " + std::to_string(N) + " comma-separated values");
  }
  return out;
}

BBox parse_bbox(const std::string& text) {
  const auto v = parse_list<4>(text, "--bbox");
  BBox b{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
         static_cast<int>(v[3])};
  for (std::size_t i = 0; i < 4; ++i) {
    if (v[i] != static_cast<double>(static_cast<int>(v[i]))) {
      throw UsageError("--bbox: values must be integers");
    }
  }
  if (b.w <= 0 || b.h <= 0) throw UsageError("--bbox: width and height must be positive");
  return b;
}

losses::LossWeights select_weights(const std::string& loss_list, const std::string& weight_list) {
  const auto w = parse_list<4>(weight_list, "--weights");
  static const std::array<std::string, 4> names{"edge", "ssim", "l1", "berhu"};
  std::array<bool, 4> on{};
  std::stringstream ss(loss_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    const auto it = std::find(names.begin(), names.end(), item);
    if (it == names.end()) {
      throw UsageError("--loss: unknown loss '" + item + "' (expected edge, ssim, l1, berhu)");
    }
    on[static_cast<std::size_t>(it - names.begin())] = true;
  }
  if (std::none_of(on.begin(), on.end(), [](bool b) { return b; })) {
    throw UsageError("--loss: list is empty");
  }
  losses::LossWeights lw{on[0] ? w[0] : 0.0, on[1] ? w[1] : 0.0, on[2] ? w[2] : 0.0,
                         on[3] ? w[3] : 0.0};
  try {
    lw.validate();
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
  return lw;
}

std::string fmt_real(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------- synth

struct SynthOpts {
  fs::path out;
  int frames = 100;
  std::uint64_t seed = 0;
  datagen::SynthParams params;
  int workers = 1;
};

void add_synth(CLI::App& app, SynthOpts& o) {
  auto* c = app.add_subcommand("synth", "Generate a synthetic dataset with a manifest");
  c->add_option("--config", "Config file of key = value lines");
  c->add_option("--out", o.out, "Output directory")->required();
  c->add_option("--frames", o.frames, "Number of frames")->check(CLI::NonNegativeNumber);
  c->add_option("--seed", o.seed, "Dataset seed");
  c->add_option("--size", o.params.image_size, "Image side in pixels")->check(CLI::PositiveNumber);
  c->add_option("--focal", o.params.focal_px, "Focal length in pixels")->check(CLI::PositiveNumber);
  c->add_option("--wingspan", o.params.wingspan_m, "Object wingspan in meters")
      ->check(CLI::PositiveNumber);
  c->add_option("--min-distance", o.params.min_distance_m, "Nearest distance in meters")
      ->check(CLI::PositiveNumber);
  c->add_option("--max-distance", o.params.max_distance_m, "Farthest distance in meters")
      ->check(CLI::PositiveNumber);
  c->add_option("--noise", o.params.noise_std, "Pixel noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  c->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
}

int run_synth(SynthOpts& o) {
  o.params.seed = o.seed;
  try {
    o.params.validate();
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
  const auto summary = pipeline::synth_dataset(o.params, o.frames, o.out, o.workers);
  spdlog::info("wrote {} frames to {}", summary.frames, o.out.string());
  std::cout << pipeline::format_summary(summary) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- train

struct ModelOpts {
  bool large = false;
  int levels = 0;
  int base_channels = 0;
};

void add_model_opts(CLI::App* c, ModelOpts& m) {
  c->add_flag("--large", m.large, "Use the larger preset (levels 4, base 16, crop 256)");
  c->add_option("--levels", m.levels, "U-Net depth (overrides the preset)")
      ->check(CLI::PositiveNumber);
  c->add_option("--base-channels", m.base_channels, "Channels at the first level")
      ->check(CLI::PositiveNumber);
}

struct PrepOpts {
  int crop = 0;
  double sigma = 2.0;
  int ksize = 9;
};

void add_prep_opts(CLI::App* c, PrepOpts& p) {
  c->add_option("--crop", p.crop, "Crop side in pixels (default 128, 256 with --large)")
      ->check(CLI::PositiveNumber);
  c->add_option("--sigma", p.sigma, "Gaussian sigma for target masks")->check(CLI::PositiveNumber);
  c->add_option("--ksize", p.ksize, "Gaussian kernel size (odd)")->check(CLI::PositiveNumber);
}

pipeline::PrepConfig prep_config(const PrepOpts& p, bool large) {
  pipeline::PrepConfig cfg;
  cfg.crop = p.crop > 0 ? p.crop : (large ? 256 : 128);
  cfg.sigma = p.sigma;
  cfg.ksize = p.ksize;
  try {
    cfg.validate();
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

struct TrainOpts {
  fs::path manifest;
  fs::path out;
  int epochs = 20;
  std::string loss = "edge,ssim,l1,berhu";
  std::string weights = "1,1,1,1";
  double lr = 1e-3;
  double weight_decay = 0.0005;
  double c_frac = 0.2;
  std::uint64_t seed = 0;
  int workers = 1;
  ModelOpts model;
  PrepOpts prep;
};

void add_train(CLI::App& app, TrainOpts& o) {
  auto* c = app.add_subcommand("train", "Train a U-Net on a manifest");
  c->add_option("--config", "Config file of key = value lines");
  c->add_option("--manifest", o.manifest, "Training manifest")->required();
  c->add_option("--out", o.out, "Checkpoint to write")->required();
  c->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::NonNegativeNumber);
  c->add_option("--loss", o.loss, "Comma-separated losses from edge,ssim,l1,berhu");
  c->add_option("--weights", o.weights, "Weights for edge,ssim,l1,berhu");
  c->add_option("--lr", o.lr, "Base learning rate")->check(CLI::PositiveNumber);
  c->add_option("--weight-decay", o.weight_decay, "Adam weight decay")
      ->check(CLI::NonNegativeNumber);
  c->add_option("--c-frac", o.c_frac, "BerHu threshold fraction")->check(CLI::PositiveNumber);
  c->add_option("--seed", o.seed, "Initialisation and shuffle seed");
  c->add_option("--workers", o.workers, "Data-loading threads")->check(CLI::PositiveNumber);
  add_model_opts(c, o.model);
  add_prep_opts(c, o.prep);
}

model::ModelConfig model_config(const ModelOpts& m, std::uint64_t seed) {
  model::ModelConfig cfg = m.large ? model::ModelConfig::large(seed) : model::ModelConfig{};
  cfg.seed = seed;
  if (m.levels > 0) cfg.levels = m.levels;
  if (m.base_channels > 0) cfg.base_channels = m.base_channels;
  try {
    cfg.validate();
  } catch (const ValueError& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

int run_train(const TrainOpts& o) {
  pipeline::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.weights = select_weights(o.loss, o.weights);
  tc.base_lr = o.lr;
  tc.adam.weight_decay = o.weight_decay;
  tc.c_frac = o.c_frac;
  tc.seed = o.seed;
  const auto mc = model_config(o.model, o.seed);
  const auto prep = prep_config(o.prep, o.model.large);
  if (prep.crop % mc.divisor() != 0) {
    throw UsageError("--crop " + std::to_string(prep.crop) + " must be divisible by 2^levels = " +
                     std::to_string(mc.divisor()));
  }

  const auto samples = pipeline::load_samples(o.manifest, prep, o.workers);
  spdlog::info("training on {} frames for {} epochs", samples.size(), o.epochs);
  std::cout << "epoch,loss,lr_mult,l2_penalty\n" << std::flush;
  const auto result = pipeline::train(samples, mc, tc, [](const pipeline::EpochLog& l) {
    std::cout << l.epoch << "," << fmt_real(l.loss) << "," << fmt_real(l.lr_mult) << ","
              << fmt_real(l.l2_penalty) << "\n"
              << std::flush;
  });
  io::save_checkpoint(result.model, &result.optimizer, o.out);
  spdlog::info("checkpoint written to {}", o.out.string());
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
  fs::path ckpt;
  fs::path manifest;
  fs::path report;
  fs::path dump_masks;
  fs::path predictions;
  int window = 5;
  double threshold = 1.25;
  int workers = 1;
  PrepOpts prep;
  bool large = false;
};

void add_eval(CLI::App& app, EvalOpts& o) {
  auto* c = app.add_subcommand("eval", "Score a checkpoint (or stored predictions) on a manifest");
  c->add_option("--config", "Config file of key = value lines");
  auto* ckpt = c->add_option("--ckpt", o.ckpt, "Checkpoint to evaluate");
  auto* preds = c->add_option("--predictions", o.predictions,
                              "Directory of <frame_id>.pfm or .pgm maps used instead of a model");
  ckpt->excludes(preds);
  c->add_option("--manifest", o.manifest, "Evaluation manifest")->required();
  c->add_option("--report", o.report, "Metric CSV to write (stdout when omitted)");
  c->add_option("--dump-masks", o.dump_masks, "Directory for predicted float maps");
  c->add_option("--window", o.window, "Sliding-window size (odd)")->check(CLI::PositiveNumber);
  c->add_option("--threshold", o.threshold, "Threshold-accuracy ratio");
  c->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  c->add_flag("--large", o.large, "Default the crop to 256");
  add_prep_opts(c, o.prep);
}

// A stored prediction is either a float map or a class mask, at crop size
// or at full-image size (then cropped with the sample's window).
DepthMask load_prediction(const fs::path& dir, const pipeline::Sample& s) {
  fs::path path = dir / (s.frame.frame_id + ".pfm");
  DepthMask m;
  if (fs::exists(path)) {
    m = io::read_float_map(path);
  } else {
    path = dir / (s.frame.frame_id + ".pgm");
    if (!fs::exists(path)) {
      throw IoError("no prediction for frame '" + s.frame.frame_id + "' in " + dir.string());
    }
    m = io::read_class_mask(path);
  }
  const int crop = s.gt_mask.width();
  if (m.width() == crop && m.height() == s.gt_mask.height()) return m;
  if (m.width() < s.window.right() || m.height() < s.window.bottom()) {
    throw IoError(path.string() + ": " + std::to_string(m.width()) + "x" +
                  std::to_string(m.height()) + " does not cover the crop window");
  }
  DepthMask out(s.window.h, s.window.w);
  for (int y = 0; y < s.window.h; ++y) {
    for (int x = 0; x < s.window.w; ++x) out.at(y, x) = m.at(s.window.y + y, s.window.x + x);
  }
  return out;
}

int run_eval(const EvalOpts& o) {
  if (o.ckpt.empty() && o.predictions.empty()) {
    throw UsageError("eval: one of --ckpt or --predictions is required");
  }
  if (o.window <= 0 || o.window % 2 == 0) throw UsageError("--window must be odd");
  if (!(o.threshold > 1.0)) throw UsageError("--threshold must exceed 1");
  const auto prep = prep_config(o.prep, o.large);

  const auto samples = pipeline::load_samples(o.manifest, prep, o.workers);
  if (samples.empty()) throw ValueError("eval: manifest has no frames");
  std::vector<DepthMask> preds;
  if (!o.predictions.empty()) {
    for (const auto& s : samples) preds.push_back(load_prediction(o.predictions, s));
  } else {
    const auto ck = io::load_checkpoint(o.ckpt);
    if (prep.crop % ck.model.config().divisor() != 0) {
      throw UsageError("--crop must be divisible by 2^levels = " +
                       std::to_string(ck.model.config().divisor()));
    }
    preds = pipeline::predict_all(ck.model, samples, o.workers);
  }
  if (!o.dump_masks.empty()) {
    fs::create_directories(o.dump_masks);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      io::write_float_map(preds[i], o.dump_masks / (samples[i].frame.frame_id + ".pfm"));
    }
  }
  const auto report = pipeline::score(preds, samples, {o.window, o.threshold});
  if (o.report.empty()) {
    std::cout << io::format_metric_report(report);
  } else {
    io::write_metric_report(report, o.report);
    std::printf("samples            %d\n", report.n_samples);
    std::printf("MAE                %.4f\n", report.mae);
    std::printf("RMSE               %.4f\n", report.rmse);
    std::printf("sliding-window acc mean %.4f  min %.4f  max %.4f\n", report.sw_acc_mean,
                report.sw_acc_min, report.sw_acc_max);
    std::printf("threshold acc      %.4f\n", report.threshold_acc);
  }
  return kExitOk;
}

// ---------------------------------------------------------------- infer

struct InferOpts {
  fs::path ckpt;
  fs::path image;
  fs::path out;
  std::string bbox;
  int crop = 0;
  int window = 5;
};

void add_infer(CLI::App& app, InferOpts& o) {
  auto* c = app.add_subcommand("infer", "Predict a depth-class map for one image");
  c->add_option("--config", "Config file of key = value lines");
  c->add_option("--ckpt", o.ckpt, "Checkpoint")->required();
  c->add_option("--image", o.image, "Input P5/P6 image")->required();
  c->add_option("--out", o.out, "Output float map (.pfm)")->required();
  c->add_option("--bbox", o.bbox, "Object box x,y,w,h; prints the three aggregator classes");
  c->add_option("--crop", o.crop, "Center-crop around --bbox before inference")
      ->check(CLI::PositiveNumber);
  c->add_option("--window", o.window, "Sliding-window size (odd)")->check(CLI::PositiveNumber);
}

int run_infer(const InferOpts& o) {
  std::optional<BBox> box;
  if (!o.bbox.empty()) box = parse_bbox(o.bbox);
  if (o.crop > 0 && !box) throw UsageError("--crop requires --bbox");
  if (o.window % 2 == 0) throw UsageError("--window must be odd");

  const auto ck = io::load_checkpoint(o.ckpt);
  ImageTensor image = pipeline::to_gray(io::read_image(o.image));
  if (o.crop > 0) {
    const BBox win = datagen::crop_window(*box, image.width(), image.height(), o.crop);
    ImageTensor cropped(1, o.crop, o.crop);
    for (int y = 0; y < o.crop; ++y) {
      for (int x = 0; x < o.crop; ++x) cropped.at(0, y, x) = image.at(0, win.y + y, win.x + x);
    }
    image = std::move(cropped);
    box = clip_to(BBox{box->x - win.x, box->y - win.y, box->w, box->h}, o.crop, o.crop);
  }
  const DepthMask pred = model::predict(ck.model, image);
  io::write_float_map(pred, o.out);
  if (box) {
    const BBox b = clip_to(*box, pred.width(), pred.height());
    if (b.w == 0 || b.h == 0) throw ValueError("--bbox lies outside the image");
    std::cout << "bbox=" << b.x << "," << b.y << "," << b.w << "," << b.h;
    for (auto agg : metrics::kAggregators) {
      std::cout << " " << metrics::aggregator_name(agg) << "="
                << metrics::sliding_window_class(pred, b, {o.window, 1, agg});
    }
    std::cout << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------- gradcheck

struct GradcheckOpts {
  std::uint64_t seed = 1;
  int trials = 10;
};

void add_gradcheck(CLI::App& app, GradcheckOpts& o) {
  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  c->add_option("--config", "Config file of key = value lines");
  c->add_option("--seed", o.seed, "Sampling seed");
  c->add_option("--trials", o.trials, "Random trials per check")->check(CLI::PositiveNumber);
}

int run_gradcheck(const GradcheckOpts& o) {
  verify::SuiteConfig cfg;
  cfg.seed = o.seed;
  cfg.trials = o.trials;
  int failed = 0;
  std::cout << "check,max_rel_error,tolerance,status\n";
  for (const auto& r : verify::run_gradcheck_suite(cfg)) {
    std::cout << r.name << "," << fmt_real(r.max_error) << "," << fmt_real(r.tolerance) << ","
              << (r.passed() ? "pass" : "FAIL") << "\n";
    if (!r.passed()) {
      spdlog::error("gradient check failed for {}: max relative error {} (tolerance {})", r.name,
                    r.max_error, r.tolerance);
      ++failed;
    }
  }
  return failed == 0 ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_logger_mt("skydepth");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);

  CLI::App app{"Depth-class masks, U-Net training and evaluation for airborne obstacles"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  SynthOpts synth;
  TrainOpts train;
  EvalOpts eval;
  InferOpts infer;
  GradcheckOpts gradcheck;
  add_synth(app, synth);
  add_train(app, train);
  add_eval(app, eval);
  add_infer(app, infer);
  add_gradcheck(app, gradcheck);

  try {
    app.parse(expand_config(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    if (app.got_subcommand("synth")) return run_synth(synth);
    if (app.got_subcommand("train")) return run_train(train);
    if (app.got_subcommand("eval")) return run_eval(eval);
    if (app.got_subcommand("infer")) return run_infer(infer);
    if (app.got_subcommand("gradcheck")) return run_gradcheck(gradcheck);
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\nRun with --help for more information.\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitFailure;
  }
  return kExitUsage;
}
