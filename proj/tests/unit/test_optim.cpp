#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "skydepth/optim.hpp"

using namespace skydepth;
using namespace skydepth::optim;
using model::NamedParam;
using numcore::Tensor;

namespace {

std::vector<NamedParam<float>> scalar_param(float value) {
  return {{"p", Tensor({1}, {value})}};
}

void set_grad(const NamedParam<float>& p, std::span<const float> g) {
  auto buf = p.tensor.grad_buffer();
  std::copy(g.begin(), g.end(), buf.begin());
}

}  // namespace

TEST_CASE("warmup multiplier examples") {
  const WarmupSchedule s{1e-3, 0.001, 1000};
  CHECK(warmup_multiplier(0, s) == 0.001);
  CHECK(warmup_multiplier(1000, s) == 1.0);
  CHECK(warmup_multiplier(5000, s) == 1.0);
  CHECK(warmup_multiplier(500, s) == doctest::Approx(0.5005).epsilon(1e-12));
}

TEST_CASE("warmup length follows the dataset size") {
  CHECK(WarmupSchedule::for_dataset(500).warmup_iters == 499);
  CHECK(WarmupSchedule::for_dataset(5000).warmup_iters == 1000);
  CHECK(WarmupSchedule::for_dataset(1001).warmup_iters == 1000);
  CHECK(WarmupSchedule::for_dataset(2).warmup_iters == 1);
  CHECK(WarmupSchedule::for_dataset(1).warmup_iters == 1);
  CHECK(WarmupSchedule::for_dataset(500, 0.01).base_lr == 0.01);
}

TEST_CASE("warmup multiplier is monotone and continuous at the end of warmup") {
  std::mt19937_64 rng(3);
  for (std::int64_t w : {1, 7, 499, 1000}) {
    const WarmupSchedule s{1e-3, 0.001, w};
    double prev = warmup_multiplier(0, s);
    for (std::int64_t x = 1; x <= w + 5; ++x) {
      const double m = warmup_multiplier(x, s);
      CHECK(m >= prev);
      prev = m;
    }
    const double a = static_cast<double>(w - 1) / static_cast<double>(w);
    CHECK(std::abs(warmup_multiplier(w - 1, s) - (0.001 * (1 - a) + a)) < 1e-15);
  }
}

TEST_CASE("warmup schedule validation") {
  CHECK_THROWS_AS((WarmupSchedule{1e-3, 0.001, 0}.validate()), ValueError);
  CHECK_THROWS_AS((WarmupSchedule{1e-3, 1.0, 10}.validate()), ValueError);
  CHECK_THROWS_AS((WarmupSchedule{0.0, 0.001, 10}.validate()), ValueError);
}

TEST_CASE("first Adam step moves by about the learning rate") {
  const auto ps = scalar_param(1.0f);
  auto st = AdamState::zeros_like(ps);
  const float g = 1.0f;
  set_grad(ps[0], {&g, 1});
  adam_step(ps, st, 0.1, {0.9, 0.999, 1e-8, 0.0});
  CHECK(ps[0].tensor.data()[0] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(st.step == 1);
}

TEST_CASE("zero gradients without decay leave parameters fixed") {
  const auto ps = scalar_param(0.7f);
  auto st = AdamState::zeros_like(ps);
  for (int i = 0; i < 25; ++i) adam_step(ps, st, 0.1, {0.9, 0.999, 1e-8, 0.0});
  CHECK(ps[0].tensor.data()[0] == 0.7f);
}

TEST_CASE("decay alone shrinks the magnitude monotonically") {
  const std::vector<NamedParam<float>> ps{{"a", Tensor({2}, {1.5f, -0.8f})}};
  auto st = AdamState::zeros_like(ps);
  float prev0 = 1.5f, prev1 = 0.8f;
  for (int i = 0; i < 30; ++i) {
    adam_step(ps, st, 1e-2, {0.9, 0.999, 1e-8, 0.0005});
    const float a = std::abs(ps[0].tensor.data()[0]);
    const float b = std::abs(ps[0].tensor.data()[1]);
    CHECK(a < prev0);
    CHECK(b < prev1);
    prev0 = a;
    prev1 = b;
  }
}

TEST_CASE("Adam matches the textbook recurrence") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n(0.0, 1.0);
  const std::vector<NamedParam<float>> ps{{"w", Tensor({3}, {0.3f, -1.2f, 2.0f})},
                                          {"b", Tensor({2}, {0.0f, 0.5f})}};
  auto st = AdamState::zeros_like(ps);
  std::vector<oracle::AdamScalar> ref(5);
  std::vector<double> expect{0.3, -1.2, 2.0, 0.0, 0.5};
  for (int step = 0; step < 40; ++step) {
    const double lr = 1e-3 * (1 + step % 3);
    std::size_t k = 0;
    for (const auto& p : ps) {
      auto buf = p.tensor.grad_buffer();
      for (auto& g : buf) {
        g = static_cast<float>(n(rng));
        expect[k] = ref[k].step(expect[k], g, lr, 0.0005);
        ++k;
      }
    }
    adam_step(ps, st, lr);
    k = 0;
    for (const auto& p : ps) {
      for (float v : p.tensor.data()) {
        CHECK(std::abs(v - expect[k]) < 2e-5);
        ++k;
      }
      p.tensor.zero_grad();
    }
  }
}

TEST_CASE("Adam is independent of parameter order") {
  const std::vector<NamedParam<float>> a{{"x", Tensor({2}, {1.0f, 2.0f})}, {"y", Tensor({1}, {3.0f})}};
  const std::vector<NamedParam<float>> b{{"y", Tensor({1}, {3.0f})}, {"x", Tensor({2}, {1.0f, 2.0f})}};
  auto sa = AdamState::zeros_like(a);
  auto sb = AdamState::zeros_like(b);
  for (int i = 0; i < 5; ++i) {
    const float gx[2] = {0.5f * i, -0.25f};
    const float gy[1] = {1.0f - i};
    set_grad(a[0], gx);
    set_grad(a[1], gy);
    set_grad(b[1], gx);
    set_grad(b[0], gy);
    adam_step(a, sa, 1e-2);
    adam_step(b, sb, 1e-2);
    for (const auto& p : a) p.tensor.zero_grad();
    for (const auto& p : b) p.tensor.zero_grad();
  }
  CHECK(std::ranges::equal(a[0].tensor.data(), b[1].tensor.data()));
  CHECK(std::ranges::equal(a[1].tensor.data(), b[0].tensor.data()));
}

TEST_CASE("non-finite gradients abort the step and name the parameter") {
  const std::vector<NamedParam<float>> ps{{"good", Tensor({1}, {1.0f})},
                                          {"enc0.conv0.w", Tensor({2}, {1.0f, 2.0f})}};
  auto st = AdamState::zeros_like(ps);
  const float ok = 1.0f;
  const float bad[2] = {0.0f, std::numeric_limits<float>::quiet_NaN()};
  set_grad(ps[0], {&ok, 1});
  set_grad(ps[1], bad);
  try {
    adam_step(ps, st, 0.1);
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("enc0.conv0.w") != std::string::npos);
  }
  CHECK(ps[0].tensor.data()[0] == 1.0f);
  CHECK(st.step == 0);
  CHECK(st.m[0][0] == 0.0f);
}

TEST_CASE("Adam argument checks") {
  const auto ps = scalar_param(1.0f);
  auto st = AdamState::zeros_like(ps);
  CHECK_THROWS_AS(adam_step(ps, st, 0.0), ValueError);
  auto wrong = AdamState::zeros_like(scalar_param(1.0f));
  wrong.m[0].push_back(0.0f);
  CHECK_FALSE(wrong.matches(ps));
  CHECK_THROWS_AS(adam_step(ps, wrong, 0.1), ShapeError);
}

TEST_CASE("l2 penalty") {
  const std::vector<NamedParam<float>> ps{{"a", Tensor({2}, {1.0f, 2.0f})}, {"b", Tensor({1}, {-2.0f})}};
  CHECK(l2_penalty(ps, 0.0005) == doctest::Approx(0.5 * 0.0005 * 9.0));
}
