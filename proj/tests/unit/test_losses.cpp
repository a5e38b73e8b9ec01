#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "skydepth/gradcheck.hpp"
#include "skydepth/losses.hpp"
#include "skydepth/numcore/ops.hpp"

using namespace skydepth;
using namespace skydepth::numcore;
using namespace skydepth::losses;

namespace {

TensorD map(int h, int w, std::vector<double> v) { return TensorD({1, 1, h, w}, std::move(v)); }

std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

std::vector<double> diff(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> e(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) e[i] = a[i] - b[i];
  return e;
}

}  // namespace

TEST_CASE("l1 examples") {
  const auto t = map(2, 2, {0, 1, 2, 3});
  CHECK(l1_loss(t, t).item() == 0.0);
  CHECK(l1_loss(map(2, 2, {1, 2, 3, 4}), t).item() == doctest::Approx(1.0));
  CHECK(l1_loss(map(1, 2, {0, 2}), map(1, 2, {1, 1})).item() == doctest::Approx(1.0));
  CHECK_THROWS_AS(l1_loss(map(1, 2, {0, 2}), map(2, 1, {1, 1})), ShapeError);
}

TEST_CASE("berhu examples") {
  const auto t = map(2, 2, {0, 1, 2, 3});
  CHECK(berhu_loss(t, t).item() == 0.0);
  CHECK(berhu_loss(map(1, 2, {0.1, 1.0}), map(1, 2, {0.0, 0.0}), 0.2).item() ==
        doctest::Approx(1.35).epsilon(1e-12));
  CHECK_THROWS_AS(berhu_loss(map(1, 2, {0, 2}), map(2, 1, {1, 1})), ShapeError);
}

TEST_CASE("berhu equals l1 when every error is within c") {
  std::mt19937_64 rng(3);
  const auto p = random_values(rng, 64, 0, 4);
  const auto t = random_values(rng, 64, 0, 4);
  CHECK(berhu_loss(map(8, 8, p), map(8, 8, t), 1.0).item() ==
        doctest::Approx(l1_loss(map(8, 8, p), map(8, 8, t)).item()).epsilon(1e-12));
  const std::vector<double> flat(16, 0.0);
  std::vector<double> shifted(16, 0.5);
  CHECK(berhu_loss(map(4, 4, shifted), map(4, 4, flat), 1.0).item() == 0.5);
  CHECK(berhu_loss(map(4, 4, shifted), map(4, 4, flat)).item() == doctest::Approx(1.3).epsilon(1e-12));
}

TEST_CASE("berhu matches the elementwise oracle and dominates l1") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto p = random_values(rng, 36, 0, 4);
    const auto t = random_values(rng, 36, 0, 4);
    const double b = berhu_loss(map(6, 6, p), map(6, 6, t)).item();
    const double l = l1_loss(map(6, 6, p), map(6, 6, t)).item();
    CHECK(b == doctest::Approx(oracle::berhu(diff(p, t), 0.2)).epsilon(1e-12));
    CHECK(l == doctest::Approx(oracle::l1(diff(p, t))).epsilon(1e-12));
    CHECK(b >= l);
  }
}

TEST_CASE("berhu works in single precision too") {
  const Tensor p({1, 1, 1, 2}, {0.1f, 1.0f});
  const Tensor t({1, 1, 1, 2}, {0.0f, 0.0f});
  CHECK(berhu_loss(p, t).item() == doctest::Approx(1.35).epsilon(1e-6));
}

TEST_CASE("edge loss examples") {
  std::mt19937_64 rng(1);
  const auto img = TensorD({1, 1, 8, 8}, random_values(rng, 64, 0, 1));
  CHECK(edge_loss(map(8, 8, std::vector<double>(64, 2.5)), img).item() == 0.0);

  std::vector<double> ramp(64);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) ramp[y * 8 + x] = 0.3 * x;
  }
  const auto flat = TensorD({1, 1, 8, 8}, std::vector<double>(64, 0.7));
  CHECK(edge_loss(map(8, 8, ramp), flat).item() == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("edge loss matches the scalar oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = random_values(rng, 64, 0, 4);
    const auto i = random_values(rng, 64, 0, 1);
    const double got = edge_loss(map(8, 8, y), TensorD({1, 1, 8, 8}, i)).item();
    CHECK(std::abs(got - oracle::edge(y, i, 8, 8)) <= 1e-5);
  }
}

TEST_CASE("edge loss averages image channels first") {
  std::mt19937_64 rng(4);
  const auto y = random_values(rng, 36, 0, 4);
  const auto r = random_values(rng, 36, 0, 1);
  const auto g = random_values(rng, 36, 0, 1);
  const auto b = random_values(rng, 36, 0, 1);
  std::vector<double> rgb;
  rgb.insert(rgb.end(), r.begin(), r.end());
  rgb.insert(rgb.end(), g.begin(), g.end());
  rgb.insert(rgb.end(), b.begin(), b.end());
  std::vector<double> gray(36);
  for (int k = 0; k < 36; ++k) gray[k] = (r[k] + g[k] + b[k]) / 3.0;
  const double got = edge_loss(map(6, 6, y), TensorD({1, 3, 6, 6}, rgb)).item();
  CHECK(std::abs(got - oracle::edge(y, gray, 6, 6)) <= 1e-9);
  CHECK_THROWS_AS(edge_loss(map(6, 6, y), TensorD({1, 1, 6, 5}, std::vector<double>(30))),
                  ShapeError);
}

TEST_CASE("ssim examples") {
  std::mt19937_64 rng(5);
  const auto p = random_values(rng, 100, 0, 4);
  CHECK(ssim_loss(map(10, 10, p), map(10, 10, p)).item() == doctest::Approx(0.0).epsilon(1e-12));
  for (int i = 0; i < 50; ++i) {
    const auto a = random_values(rng, 100, 0, 4);
    const auto b = random_values(rng, 100, 0, 4);
    const double l = ssim_loss(map(10, 10, a), map(10, 10, b)).item();
    CHECK(l >= 0.0);
    CHECK(l <= 2.0);
  }
  std::vector<double> inv(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) inv[i] = 4.0 - p[i];
  const double anti = ssim_loss(map(10, 10, p), map(10, 10, inv)).item();
  CHECK(anti > 1.0);
  CHECK(anti <= 2.0);
  CHECK_THROWS_AS(ssim_loss(map(5, 5, std::vector<double>(25)), map(5, 5, std::vector<double>(25))),
                  ShapeError);
}

TEST_CASE("ssim of a single window matches the direct formula") {
  std::mt19937_64 rng(6);
  SsimConfig cfg = SsimConfig::for_range(4.0, 9);
  CHECK(cfg.c1 == doctest::Approx(0.0016));
  CHECK(cfg.c2 == doctest::Approx(0.0144));
  for (int trial = 0; trial < 10; ++trial) {
    const auto p = random_values(rng, 81, 0, 4);
    const auto t = random_values(rng, 81, 0, 4);
    const double got = ssim_loss(map(9, 9, p), map(9, 9, t), cfg).item();
    CHECK(std::abs(got - (1.0 - oracle::ssim_window(p, t, cfg.c1, cfg.c2))) <= 1e-6);
  }
}

TEST_CASE("ssim averages over every valid window") {
  std::mt19937_64 rng(7);
  const SsimConfig cfg = SsimConfig::for_range(4.0, 3);
  const auto p = random_values(rng, 30, 0, 4);
  const auto t = random_values(rng, 30, 0, 4);
  double s = 0.0;
  int count = 0;
  for (int y = 0; y + 3 <= 5; ++y) {
    for (int x = 0; x + 3 <= 6; ++x) {
      std::vector<double> wp, wt;
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          wp.push_back(p[(y + i) * 6 + x + j]);
          wt.push_back(t[(y + i) * 6 + x + j]);
        }
      }
      s += oracle::ssim_window(wp, wt, cfg.c1, cfg.c2);
      ++count;
    }
  }
  CHECK(std::abs(ssim_loss(map(5, 6, p), map(5, 6, t), cfg).item() - (1.0 - s / count)) <= 1e-9);
}

TEST_CASE("ssim config validation") {
  SsimConfig cfg;
  cfg.window = 4;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
  cfg = SsimConfig{};
  cfg.c1 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValueError);
}

TEST_CASE("combined loss") {
  std::mt19937_64 rng(9);
  const auto p = map(8, 8, random_values(rng, 64, 0, 4));
  const auto t = map(8, 8, random_values(rng, 64, 0, 4));
  const auto img = TensorD({1, 1, 8, 8}, random_values(rng, 64, 0, 1));

  CHECK(combined_loss(p, t, img, {0, 0, 1, 0}).item() == l1_loss(p, t).item());

  const double parts = edge_loss(p, img).item() + ssim_loss(p, t).item() + l1_loss(p, t).item() +
                       berhu_loss(p, t).item();
  CHECK(std::abs(combined_loss(p, t, img, {1, 1, 1, 1}).item() - parts) <= 1e-6);

  const double once = combined_loss(p, t, img, {0.5, 0.25, 2.0, 1.5}).item();
  const double twice = combined_loss(p, t, img, {1.0, 0.5, 4.0, 3.0}).item();
  CHECK(std::abs(twice - 2.0 * once) <= 1e-6 * std::abs(twice));

  const auto c = map(8, 8, std::vector<double>(64, 1.5));
  CHECK(combined_loss(c, c, img, {1, 1, 1, 1}).item() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(combined_loss(p, p, img, {0, 1, 1, 1}).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("loss weights validation") {
  CHECK_THROWS_AS((LossWeights{0, 0, 0, 0}.validate()), ValueError);
  CHECK_THROWS_AS((LossWeights{-1, 1, 1, 1}.validate()), ValueError);
  CHECK_NOTHROW((LossWeights{0, 0, 0, 1}.validate()));
}

TEST_CASE("zero-weight terms are not evaluated") {
  const auto p = map(4, 4, std::vector<double>(16, 1.0));
  const auto t = map(4, 4, std::vector<double>(16, 2.0));
  const auto img = TensorD({1, 1, 4, 4}, std::vector<double>(16, 0.5));
  CHECK_THROWS(combined_loss(p, t, img, {0, 1, 0, 0}));
  CHECK(combined_loss(p, t, img, {1, 0, 1, 1}).item() == doctest::Approx(3.6));
}

TEST_CASE("all losses are non-negative and vanish at pred == target") {
  std::mt19937_64 rng(10);
  for (int i = 0; i < 50; ++i) {
    const auto p = map(8, 8, random_values(rng, 64, -1, 5));
    const auto t = map(8, 8, random_values(rng, 64, 0, 4));
    const auto img = TensorD({1, 1, 8, 8}, random_values(rng, 64, 0, 1));
    CHECK(l1_loss(p, t).item() >= 0.0);
    CHECK(berhu_loss(p, t).item() >= 0.0);
    CHECK(edge_loss(p, img).item() >= 0.0);
    CHECK(ssim_loss(p, t).item() >= 0.0);
    CHECK(l1_loss(t, t).item() == 0.0);
    CHECK(berhu_loss(t, t).item() == 0.0);
    CHECK(ssim_loss(t, t).item() == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("loss gradients agree with finite differences away from kinks") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> p(64), t(64);
    for (int i = 0; i < 64; ++i) {
      t[i] = 0.05 * i;
      p[i] = t[i] + (i % 3 == 0 ? 1.0 : -0.1) * (1.0 + 0.01 * trial) + 0.001 * i;
    }
    const auto target = map(8, 8, t);
    const auto img = TensorD({1, 1, 8, 8}, random_values(rng, 64, 0, 1));
    const std::vector<verify::Builder<double>> builders{
        [&](const std::vector<TensorD>& in) { return l1_loss(in[0], target); },
        [&](const std::vector<TensorD>& in) { return berhu_loss(in[0], target); },
        [&](const std::vector<TensorD>& in) { return ssim_loss(in[0], target); },
    };
    for (const auto& b : builders) CHECK(verify::grad_check<double>(b, {map(8, 8, p)}, 1e-3) < 1e-3);
  }
}
