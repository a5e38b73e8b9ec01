#include <algorithm>
#include <numeric>
#include <random>

#include "skydepth/gradcheck.hpp"
#include "skydepth/losses.hpp"
#include "skydepth/model.hpp"
#include "skydepth/numcore/ops.hpp"

namespace skydepth::verify {

namespace {

namespace nc = numcore;
using TD = nc::TensorD;
using Inputs = std::vector<TD>;

class Sampler {
 public:
  Sampler(std::uint64_t seed, std::uint64_t check, std::uint64_t trial) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(check), static_cast<std::uint32_t>(trial)};
    rng_.seed(seq);
  }

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  int extent(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

  TD tensor(const nc::Shape& shape, double lo = -1.0, double hi = 1.0) {
    std::vector<double> v(static_cast<std::size_t>(nc::numel_of(shape)));
    for (auto& x : v) x = uniform(lo, hi);
    return TD(shape, std::move(v));
  }

  // Distinct values on a grid of spacing `step`, shuffled; max-type
  // reductions then have no near-ties.
  TD distinct(const nc::Shape& shape, double step) {
    const auto n = static_cast<std::size_t>(nc::numel_of(shape));
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = (static_cast<double>(i) - n / 2.0) * step;
    std::shuffle(v.begin(), v.end(), rng_);
    return TD(shape, std::move(v));
  }

  nc::Shape activation_shape() { return {extent(1, 2), extent(1, 4), 8, 8}; }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

struct Case {
  Builder<double> builder;
  Inputs inputs;
};

using CaseFactory = std::function<Case(Sampler&, double margin)>;

struct Check {
  std::string name;
  CaseFactory make;
  bool end_to_end = false;
};

Case primitive_case(nc::Primitive kind, Inputs inputs, Sampler& s, nc::PrimitiveAttrs attrs = {},
                    std::size_t constant_prefix = 0) {
  // The probe weights are drawn once so the builder is deterministic.
  TD probe;
  {
    nc::NoGradGuard g;
    std::vector<TD> in(inputs.begin(), inputs.end());
    const TD out = nc::primitive_forward<double>(kind, in, attrs);
    probe = s.tensor(out.shape(), 0.5, 1.5);
  }
  const Inputs constants(inputs.begin(), inputs.begin() + static_cast<long>(constant_prefix));
  Inputs checked(inputs.begin() + static_cast<long>(constant_prefix), inputs.end());
  Builder<double> builder = [kind, attrs, probe, constants](const Inputs& xs) {
    std::vector<TD> all = constants;
    all.insert(all.end(), xs.begin(), xs.end());
    const TD out = nc::primitive_forward<double>(kind, all, attrs);
    return out.rank() == 0 ? out : nc::mean(nc::mul(out, probe));
  };
  return {builder, std::move(checked)};
}

CaseFactory binary(nc::Primitive kind, bool broadcast = false) {
  return [kind, broadcast](Sampler& s, double) {
    const auto shape = s.activation_shape();
    TD a = s.tensor(shape);
    TD b = broadcast ? s.tensor({}) : s.tensor(shape);
    if (kind == nc::Primitive::div) {
      auto d = b.mutable_data();
      for (auto& v : d) v = (v < 0 ? -1.0 : 1.0) * (0.5 + std::abs(v));
    }
    return primitive_case(kind, {a, b}, s);
  };
}

CaseFactory unary(nc::Primitive kind, std::initializer_list<double> kinks = {},
                  nc::PrimitiveAttrs attrs = {}, double lo = -1.0, double hi = 1.0) {
  const std::vector<double> k(kinks);
  return [kind, k, attrs, lo, hi](Sampler& s, double margin) {
    const auto shape = s.activation_shape();
    TD x = s.tensor(shape, lo, hi);
    if (!k.empty()) {
      auto d = x.mutable_data();
      for (auto& v : d) {
        while (std::any_of(k.begin(), k.end(), [&](double p) { return std::abs(v - p) < margin; })) {
          v = s.uniform(lo, hi);
        }
      }
    }
    return primitive_case(kind, {x}, s, attrs);
  };
}

CaseFactory conv(int stride, nc::PadMode mode) {
  return [stride, mode](Sampler& s, double) {
    const auto shape = s.activation_shape();
    const int co = s.extent(1, 4);
    TD x = s.tensor(shape);
    TD w = s.tensor({co, shape[1], 3, 3});
    TD b = s.tensor({co});
    nc::PrimitiveAttrs attrs;
    attrs.conv = {stride, 1, mode};
    return primitive_case(nc::Primitive::conv2d, {x, w, b}, s, attrs);
  };
}

// Element errors |pred - target| away from 0 (L1 and BerHu kinks) and from
// the BerHu threshold c = c_frac * max|e|, with no near-tie for the maximum.
bool errors_ok(const TD& pred, const TD& target, double margin, double c_frac) {
  const auto p = pred.data();
  const auto t = target.data();
  std::vector<double> mag(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) mag[i] = std::abs(p[i] - t[i]);
  std::vector<double> sorted = mag;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  if (sorted.size() >= 2 && sorted[0] - sorted[1] <= margin) return false;
  const double c = c_frac * sorted[0];
  return std::none_of(mag.begin(), mag.end(),
                      [&](double m) { return m < margin || std::abs(m - c) < margin; });
}

// Forward differences of the prediction away from zero (edge-loss kinks).
bool differences_ok(const TD& pred, double margin) {
  const auto& sh = pred.shape();
  const auto h = sh[2], w = sh[3];
  const auto p = pred.data();
  for (std::int64_t plane = 0; plane < sh[0] * sh[1]; ++plane) {
    const double* base = p.data() + plane * h * w;
    for (std::int64_t y = 0; y < h; ++y) {
      for (std::int64_t x = 0; x < w; ++x) {
        const double v = base[y * w + x];
        if (x + 1 < w && std::abs(base[y * w + x + 1] - v) < margin) return false;
        if (y + 1 < h && std::abs(base[(y + 1) * w + x] - v) < margin) return false;
      }
    }
  }
  return true;
}

// Redraws prediction elements until `ok` holds.
template <typename Ok>
void resample_until(TD& pred, Sampler& s, Ok ok) {
  auto p = pred.mutable_data();
  for (int attempt = 0; attempt < 100000; ++attempt) {
    if (ok()) return;
    p[static_cast<std::size_t>(s.extent(0, static_cast<int>(p.size()) - 1))] = s.uniform(0.0, 4.0);
  }
  throw NumericError("gradcheck: could not place loss inputs away from kinks");
}

nc::Shape loss_shape(Sampler& s) { return {s.extent(1, 2), 1, 8, 8}; }

CaseFactory l1_case() {
  return [](Sampler& s, double margin) {
    const auto shape = loss_shape(s);
    TD target = s.tensor(shape, 0.0, 4.0);
    TD pred = s.tensor(shape, 0.0, 4.0);
    resample_until(pred, s, [&] { return errors_ok(pred, target, margin, 0.2); });
    Builder<double> b = [](const Inputs& xs) { return losses::l1_loss(xs[0], xs[1]); };
    return Case{b, {pred, target}};
  };
}

CaseFactory berhu_case() {
  return [](Sampler& s, double margin) {
    const auto shape = loss_shape(s);
    TD target = s.tensor(shape, 0.0, 4.0);
    TD pred = s.tensor(shape, 0.0, 4.0);
    resample_until(pred, s, [&] { return errors_ok(pred, target, margin, 0.2); });
    Builder<double> b = [](const Inputs& xs) { return losses::berhu_loss(xs[0], xs[1], 0.2); };
    return Case{b, {pred, target}};
  };
}

CaseFactory edge_case() {
  return [](Sampler& s, double margin) {
    const auto shape = loss_shape(s);
    TD pred = s.tensor(shape, 0.0, 4.0);
    resample_until(pred, s, [&] { return differences_ok(pred, margin); });
    const TD image = s.tensor({shape[0], 3, 8, 8}, 0.0, 1.0);
    Builder<double> b = [image](const Inputs& xs) { return losses::edge_loss(xs[0], image); };
    return Case{b, {pred}};
  };
}

CaseFactory ssim_case() {
  return [](Sampler& s, double) {
    const auto shape = loss_shape(s);
    TD pred = s.tensor(shape, 0.0, 4.0);
    TD target = s.tensor(shape, 0.0, 4.0);
    Builder<double> b = [](const Inputs& xs) { return losses::ssim_loss(xs[0], xs[1]); };
    return Case{b, {pred, target}};
  };
}

CaseFactory combined_case() {
  return [](Sampler& s, double margin) {
    const auto shape = loss_shape(s);
    TD target = s.tensor(shape, 0.0, 4.0);
    TD pred = s.tensor(shape, 0.0, 4.0);
    resample_until(pred, s, [&] {
      return errors_ok(pred, target, margin, 0.2) && differences_ok(pred, margin);
    });
    const TD image = s.tensor({shape[0], 1, 8, 8}, 0.0, 1.0);
    const losses::LossWeights w{s.uniform(0.5, 1.5), s.uniform(0.5, 1.5), s.uniform(0.5, 1.5),
                                s.uniform(0.5, 1.5)};
    Builder<double> b = [image, w](const Inputs& xs) {
      return losses::combined_loss(xs[0], xs[1], image, w);
    };
    return Case{b, {pred, target}};
  };
}

CaseFactory unet_case() {
  return [](Sampler& s, double) {
    model::ModelConfig cfg{1, 2, 1, 1, s.engine()()};
    const auto m = model::unet_init(cfg).cast<double>();
    Inputs params;
    std::vector<std::string> names;
    for (const auto& p : m.params()) {
      // Zero biases put pre-activations of all-zero patches exactly on the
      // ReLU kink.
      if (p.tensor.rank() == 1) {
        for (auto& v : p.tensor.mutable_data()) v = s.uniform(0.05, 0.25);
      }
      params.push_back(p.tensor);
      names.push_back(p.name);
    }
    const TD image = s.tensor({1, 1, 8, 8}, 0.0, 1.0);
    const TD target = s.tensor({1, 1, 8, 8}, 0.0, 4.0);
    Builder<double> b = [cfg, names, image, target](const Inputs& xs) {
      std::vector<model::NamedParam<double>> named;
      for (std::size_t i = 0; i < xs.size(); ++i) named.push_back({names[i], xs[i]});
      const model::BasicModel<double> net(cfg, std::move(named));
      return losses::l1_loss(model::unet_forward(net, image), target);
    };
    return Case{b, params};
  };
}

std::vector<Check> all_checks() {
  using P = nc::Primitive;
  nc::PrimitiveAttrs scale;
  scale.scalar = -1.7;
  nc::PrimitiveAttrs bounds;
  bounds.lo = -0.5;
  bounds.hi = 0.5;
  std::vector<Check> checks = {
      {"add", binary(P::add)},
      {"add(broadcast)", binary(P::add, true)},
      {"sub", binary(P::sub)},
      {"mul", binary(P::mul)},
      {"div", binary(P::div)},
      {"scalar_mul", unary(P::scalar_mul, {}, scale)},
      {"relu", unary(P::relu, {0.0})},
      {"conv2d(stride1,zero)", conv(1, nc::PadMode::zero)},
      {"conv2d(stride1,reflect)", conv(1, nc::PadMode::reflect)},
      {"conv2d(stride2,zero)", conv(2, nc::PadMode::zero)},
      {"conv2d(stride2,reflect)", conv(2, nc::PadMode::reflect)},
      {"max_pool2",
       [](Sampler& s, double margin) {
         return primitive_case(P::max_pool2, {s.distinct(s.activation_shape(), 4.0 * margin)}, s);
       }},
      {"upsample2",
       [](Sampler& s, double) {
         return primitive_case(P::upsample2, {s.tensor({s.extent(1, 2), s.extent(1, 4), 4, 4})}, s);
       }},
      {"concat",
       [](Sampler& s, double) {
         const int n = s.extent(1, 2);
         return primitive_case(P::concat,
                               {s.tensor({n, s.extent(1, 2), 8, 8}), s.tensor({n, 2, 8, 8})}, s);
       }},
      {"mean", unary(P::mean)},
      {"amax",
       [](Sampler& s, double margin) {
         return primitive_case(P::amax, {s.distinct(s.activation_shape(), 4.0 * margin)}, s);
       }},
      {"abs", unary(P::abs, {0.0})},
      {"square", unary(P::square)},
      {"sqrt", unary(P::sqrt, {}, {}, 0.5, 2.0)},
      {"exp", unary(P::exp)},
      {"clamp", unary(P::clamp, {-0.5, 0.5}, bounds)},
      {"where",
       [](Sampler& s, double) {
         const auto shape = s.activation_shape();
         TD cond = s.tensor(shape);
         for (auto& v : cond.mutable_data()) v = v > 0.0 ? 1.0 : 0.0;
         return primitive_case(P::where, {cond, s.tensor(shape), s.tensor(shape)}, s, {}, 1);
       }},
      {"l1_loss", l1_case()},
      {"berhu_loss", berhu_case()},
      {"edge_loss", edge_case()},
      {"ssim_loss", ssim_case()},
      {"combined_loss", combined_case()},
      {"unet(levels=1,base=2)+l1", unet_case(), true},
  };
  return checks;
}

}  // namespace

std::vector<CheckResult> run_gradcheck_suite(const SuiteConfig& cfg) {
  if (cfg.trials < 1) throw ValueError("gradcheck: trials must be at least 1");
  // Kinks must sit outside the finite-difference stencil.
  const double margin = 10.0 * cfg.eps;
  std::vector<CheckResult> results;
  const auto checks = all_checks();
  for (std::size_t c = 0; c < checks.size(); ++c) {
    CheckResult r;
    r.name = checks[c].name;
    r.tolerance = checks[c].end_to_end ? cfg.end_to_end_tolerance : cfg.tolerance;
    for (int t = 0; t < cfg.trials; ++t) {
      Sampler s(cfg.seed, c, static_cast<std::uint64_t>(t));
      const Case k = checks[c].make(s, margin);
      const double eps = checks[c].end_to_end ? cfg.end_to_end_eps : cfg.eps;
      r.max_error = std::max(r.max_error, grad_check(k.builder, k.inputs, eps));
    }
    results.push_back(r);
  }
  return results;
}

}  // namespace skydepth::verify
