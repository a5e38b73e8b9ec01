#include <cmath>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "skydepth/gradcheck.hpp"
#include "skydepth/losses.hpp"
#include "skydepth/model.hpp"
#include "skydepth/numcore/graph.hpp"
#include "skydepth/numcore/ops.hpp"
#include "skydepth/optim.hpp"

using namespace skydepth;
using namespace skydepth::model;
using numcore::Graph;
using numcore::GraphScope;
using numcore::Tensor;

namespace {

// Sum over every conv of out*in*k*k + out, written from the ladder rather
// than from the layout table.
std::int64_t closed_form_count(int levels, int base, int in) {
  const auto ch = [&](int i) -> std::int64_t { return static_cast<std::int64_t>(base) << i; };
  const auto conv = [](std::int64_t o, std::int64_t i, std::int64_t k) { return o * i * k * k + o; };
  std::int64_t n = 0;
  for (int i = 0; i < levels; ++i) {
    n += conv(ch(i), i == 0 ? in : ch(i - 1), 3) + conv(ch(i), ch(i), 3);
  }
  n += conv(ch(levels), ch(levels - 1), 3) + conv(ch(levels), ch(levels), 3);
  for (int i = 0; i < levels; ++i) n += conv(ch(i), ch(i + 1) + ch(i), 3) + conv(ch(i), ch(i), 3);
  return n + conv(1, ch(0), 1);
}

Tensor random_image(std::mt19937_64& rng, int n, int c, int h, int w) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(static_cast<std::size_t>(n * c * h * w));
  for (auto& x : v) x = u(rng);
  return Tensor({n, c, h, w}, std::move(v));
}

// Blob image whose target is 1 inside the blob and 4 elsewhere.
std::pair<Tensor, Tensor> toy_pair(int size) {
  std::vector<float> img(static_cast<std::size_t>(size * size)), tgt(img.size());
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool in = std::abs(x - size / 2) < size / 5 && std::abs(y - size / 2) < size / 8;
      img[static_cast<std::size_t>(y * size + x)] = in ? 0.15f : 0.8f - 0.2f * y / size;
      tgt[static_cast<std::size_t>(y * size + x)] = in ? 1.0f : 4.0f;
    }
  }
  return {Tensor({1, 1, size, size}, img), Tensor({1, 1, size, size}, tgt)};
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
  float m = 0.0f;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace

TEST_CASE("encoder channel ladder") {
  const auto m = unet_init({3, 8, 1, 1, 0});
  CHECK(m.param("enc0.conv0.w").shape() == numcore::Shape{8, 1, 3, 3});
  CHECK(m.param("enc1.conv0.w").shape() == numcore::Shape{16, 8, 3, 3});
  CHECK(m.param("enc2.conv1.w").shape() == numcore::Shape{32, 32, 3, 3});
  CHECK(m.param("dec0.conv0.w").shape() == numcore::Shape{8, 24, 3, 3});
  CHECK(m.param("head.w").shape() == numcore::Shape{1, 8, 1, 1});
  CHECK_THROWS_AS(m.param("nope"), ValueError);
}

TEST_CASE("parameter names are unique and match the layout") {
  const ModelConfig cfg{3, 8, 1, 1, 5};
  const auto m = unet_init(cfg);
  const auto layout = unet_layout(cfg);
  REQUIRE(layout.size() == m.params().size());
  std::set<std::string> names;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    CHECK(m.params()[i].name == layout[i].first);
    CHECK(m.params()[i].tensor.shape() == layout[i].second);
    names.insert(layout[i].first);
  }
  CHECK(names.size() == layout.size());
}

TEST_CASE("parameter count closed form") {
  CHECK(unet_init({3, 8, 1, 1, 0}).parameter_count() == closed_form_count(3, 8, 1));
  CHECK(unet_init({1, 2, 1, 1, 0}).parameter_count() == closed_form_count(1, 2, 1));
  CHECK(unet_init(ModelConfig::large()).parameter_count() == closed_form_count(4, 16, 1));
  CHECK(unet_init({2, 4, 3, 1, 0}).parameter_count() == closed_form_count(2, 4, 3));
}

TEST_CASE("initialisation is seeded and He-scaled") {
  const auto a = unet_init({3, 8, 1, 1, 42});
  const auto b = unet_init({3, 8, 1, 1, 42});
  const auto c = unet_init({3, 8, 1, 1, 43});
  bool differs = false;
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(std::ranges::equal(a.params()[i].tensor.data(), b.params()[i].tensor.data()));
    differs = differs || !std::ranges::equal(a.params()[i].tensor.data(), c.params()[i].tensor.data());
  }
  CHECK(differs);
  for (float v : a.param("enc0.conv0.b").data()) CHECK(v == 0.0f);
  const auto w = a.param("enc2.conv1.w").data();
  double s = 0.0, s2 = 0.0;
  for (float v : w) {
    s += v;
    s2 += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(w.size());
  const double sd = std::sqrt(s2 / n - (s / n) * (s / n));
  CHECK(sd == doctest::Approx(std::sqrt(2.0 / (32 * 9))).epsilon(0.05));
  CHECK(std::abs(s / n) < 0.01);
}

TEST_CASE("invalid configurations are rejected") {
  CHECK_THROWS_AS(unet_init({0, 8, 1, 1, 0}), ValueError);
  CHECK_THROWS_AS(unet_init({3, 0, 1, 1, 0}), ValueError);
  CHECK_THROWS_AS(unet_init({3, 8, 1, 2, 0}), ValueError);
}

TEST_CASE("forward preserves spatial shape and is deterministic") {
  std::mt19937_64 rng(1);
  const auto m = unet_init({3, 8, 1, 1, 0});
  const auto x = random_image(rng, 1, 1, 128, 128);
  const auto y = unet_forward(m, x);
  CHECK(y.shape() == numcore::Shape{1, 1, 128, 128});
  CHECK(std::ranges::equal(unet_forward(m, x).data(), y.data()));
  const auto r = unet_forward(m, random_image(rng, 2, 1, 16, 24));
  CHECK(r.shape() == numcore::Shape{2, 1, 16, 24});
}

TEST_CASE("forward rejects indivisible extents with the required divisor") {
  const auto m = unet_init({3, 8, 1, 1, 0});
  try {
    (void)unet_forward(m, Tensor::zeros({1, 1, 20, 16}));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("8") != std::string::npos);
  }
  CHECK_THROWS_AS(unet_forward(m, Tensor::zeros({1, 3, 16, 16})), ShapeError);
}

TEST_CASE("predict matches the tensor forward pass") {
  std::mt19937_64 rng(2);
  const auto m = unet_init({2, 4, 1, 1, 3});
  ImageTensor img(1, 16, 16);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : img.data()) v = u(rng);
  const auto mask = predict(m, img);
  const auto y = unet_forward(m, to_tensor(img));
  CHECK(std::ranges::equal(mask.data(), y.data()));
}

TEST_CASE("clone does not share storage") {
  const auto m = unet_init({1, 2, 1, 1, 0});
  const auto c = m.clone();
  c.params()[0].tensor.mutable_data()[0] += 1.0f;
  CHECK(c.params()[0].tensor.data()[0] != m.params()[0].tensor.data()[0]);
}

TEST_CASE("one gradient step decreases the combined loss") {
  int decreased = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed + 100);
    const auto m = unet_init({3, 8, 1, 1, seed});
    const auto x = random_image(rng, 1, 1, 32, 32);
    std::uniform_real_distribution<float> u(0.0f, 4.0f);
    std::vector<float> t(32 * 32);
    for (auto& v : t) v = u(rng);
    const Tensor target({1, 1, 32, 32}, t);

    m.set_requires_grad(true);
    Graph g;
    double before = 0.0;
    {
      GraphScope scope(g);
      const auto loss = losses::combined_loss(unet_forward(m, x), target, x, {});
      before = loss.item();
      numcore::backward(g, loss);
    }
    for (const auto& p : m.params()) {
      if (!p.tensor.has_grad()) continue;
      auto d = p.tensor.mutable_data();
      const auto gr = p.tensor.grad();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] -= 1e-3f * gr[i];
    }
    m.zero_grad();
    m.set_requires_grad(false);
    const double after = losses::combined_loss(unet_forward(m, x), target, x, {}).item();
    decreased += after < before;
  }
  CHECK(decreased >= 9);
}

TEST_CASE("both skip and bottleneck perturbations change a trained model's output") {
  const auto [x, target] = toy_pair(32);
  const auto m = unet_init({2, 4, 1, 1, 7});
  auto state = optim::AdamState::zeros_like(m.params());
  m.set_requires_grad(true);
  for (int step = 0; step < 60; ++step) {
    Graph g;
    GraphScope scope(g);
    numcore::backward(g, losses::l1_loss(unet_forward(m, x), target));
    optim::adam_step(m.params(), state, 1e-2);
    m.zero_grad();
  }
  m.set_requires_grad(false);
  const auto base = unet_forward(m, x);
  const auto deep = unet_forward(m, x, {true, -1});
  CHECK(max_abs_diff(base, deep) > 0.0f);
  for (int level = 0; level < 2; ++level) {
    const auto skip = unet_forward(m, x, {false, level});
    CHECK(max_abs_diff(base, skip) > 0.0f);
  }
}

TEST_CASE("tiny network gradients agree with finite differences") {
  std::mt19937_64 rng(4);
  const auto m = unet_init({1, 2, 1, 1, 9}).cast<double>();
  std::uniform_real_distribution<double> u(0.05, 0.25);
  for (const auto& p : m.params()) {
    if (p.tensor.rank() == 1) {
      for (auto& v : p.tensor.mutable_data()) v = u(rng);
    }
  }
  std::vector<numcore::TensorD> inputs;
  for (const auto& p : m.params()) inputs.push_back(p.tensor);
  std::uniform_real_distribution<double> px(0.0, 1.0);
  std::vector<double> img(64), tgt(64);
  for (auto& v : img) v = px(rng);
  for (auto& v : tgt) v = 10.0 + px(rng);
  const numcore::TensorD image({1, 1, 8, 8}, img);
  const numcore::TensorD target({1, 1, 8, 8}, tgt);
  verify::Builder<double> f = [&](const std::vector<numcore::TensorD>& in) {
    std::vector<NamedParam<double>> ps;
    for (std::size_t i = 0; i < in.size(); ++i) ps.push_back({m.params()[i].name, in[i]});
    return losses::l1_loss(unet_forward(BasicModel<double>(m.config(), ps), image), target);
  };
  CHECK(verify::grad_check<double>(f, inputs, 1e-6) < 1e-2);
}
