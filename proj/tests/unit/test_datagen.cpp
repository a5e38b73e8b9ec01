#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <string>

#include "doctest.h"
#include "oracles.hpp"
#include "skydepth/datagen.hpp"

using namespace skydepth;
using namespace skydepth::datagen;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("skydepth_test_datagen_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream(p, std::ios::binary) << s;
}

std::string error_of(const std::filesystem::path& p) {
  try {
    (void)load_manifest(p);
  } catch (const IoError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("bin_distance examples") {
  CHECK(bin_distance(150) == 0);
  CHECK(bin_distance(350) == 1);
  CHECK(bin_distance(200.0) == 1);
  CHECK(bin_distance(400.0) == 2);
  CHECK(bin_distance(600.0) == 3);
  CHECK(bin_distance(700.0) == 3);
  CHECK(bin_distance(std::nextafter(700.0, 1e9)) == 4);
  CHECK(bin_distance(800) == 4);
  CHECK(bin_distance(0.0) == 0);
}

TEST_CASE("bin_distance rejects invalid distances") {
  CHECK_THROWS_AS(bin_distance(std::numeric_limits<double>::quiet_NaN()), ValueError);
  CHECK_THROWS_AS(bin_distance(std::numeric_limits<double>::infinity()), ValueError);
  CHECK_THROWS_AS(bin_distance(-1.0), ValueError);
}

TEST_CASE("class bins invariants") {
  ClassBins bins;
  CHECK(bins.num_classes() == 5);
  CHECK_NOTHROW(bins.validate());
  bins.upper_edges_m = {200, 200, 600, 700};
  CHECK_THROWS_AS(bins.validate(), ValueError);
}

TEST_CASE("build_mask paints the bbox with the bin and the rest with background") {
  AnnotatedFrame f{"a", "a.pgm", {10, 10, 20, 20}, 350.0};
  const auto m = build_mask(f, 64, 64);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const bool in = x >= 10 && x < 30 && y >= 10 && y < 30;
      CHECK(m.at(y, x) == (in ? 1.0f : 4.0f));
    }
  }
  f.distance_m = 800.0;
  const auto u = build_mask(f, 64, 64);
  for (float v : u.data()) CHECK(v == 4.0f);
}

TEST_CASE("build_mask clips a partially visible bbox and rejects an invisible one") {
  AnnotatedFrame f{"a", "a.pgm", {-5, 50, 10, 30}, 100.0};
  const auto m = build_mask(f, 64, 64);
  int painted = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      if (m.at(y, x) == 0.0f) {
        ++painted;
        CHECK(x < 5);
        CHECK(y >= 50);
      }
    }
  }
  CHECK(painted == 5 * 14);
  f.bbox = {70, 70, 5, 5};
  CHECK_THROWS_AS(build_mask(f, 64, 64), ValueError);
}

TEST_CASE("build_mask interior equals bin_distance over random pairs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.0, 1000.0);
  std::uniform_int_distribution<int> pos(0, 40), ext(1, 24);
  for (int i = 0; i < 2000; ++i) {
    const double d = dist(rng);
    const BBox b{pos(rng), pos(rng), ext(rng), ext(rng)};
    const auto m = build_mask({"f", "f.pgm", b, d}, 48, 48);
    const BBox c = clip_to(b, 48, 48);
    CHECK(m.at(c.y, c.x) == static_cast<float>(oracle::distance_class(d == 700.0 ? 699.0 : d)));
    for (float v : m.data()) CHECK((v == std::floor(v) && v >= 0.0f && v <= 4.0f));
  }
}

TEST_CASE("crop window arithmetic") {
  CHECK(crop_window({246, 246, 20, 20}, 512, 512, 128) == BBox{192, 192, 128, 128});
  CHECK(crop_window({5, 5, 10, 10}, 512, 512, 128) == BBox{0, 0, 128, 128});
  CHECK(crop_window({500, 490, 10, 10}, 512, 512, 128) == BBox{384, 384, 128, 128});
  CHECK_THROWS_AS(crop_window({0, 0, 4, 4}, 100, 512, 128), ValueError);
  CHECK_THROWS_AS(crop_window({0, 0, 4, 4}, 512, 512, 0), ValueError);
}

TEST_CASE("center_crop keeps bbox values and re-expresses the bbox") {
  const AnnotatedFrame f{"a", "a.pgm", {300, 200, 12, 6}, 250.0};
  ImageTensor img(1, 512, 512);
  for (int y = 0; y < 512; ++y) {
    for (int x = 0; x < 512; ++x) img.at(0, y, x) = static_cast<float>((x + 3 * y) % 97) / 97.0f;
  }
  const auto mask = build_mask(f, 512, 512);
  const auto r = center_crop(img, mask, f.bbox, 128);
  CHECK(r.window == BBox{242, 139, 128, 128});
  CHECK(r.bbox == BBox{58, 61, 12, 6});
  for (int y = 0; y < r.bbox.h; ++y) {
    for (int x = 0; x < r.bbox.w; ++x) CHECK(r.mask.at(r.bbox.y + y, r.bbox.x + x) == 1.0f);
  }
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) CHECK(r.image.at(0, y, x) == img.at(0, 139 + y, 242 + x));
  }
}

TEST_CASE("crop and mask construction commute") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pos(-10, 100), ext(1, 40);
  std::uniform_real_distribution<double> dist(0.0, 900.0);
  for (int i = 0; i < 200; ++i) {
    const AnnotatedFrame f{"f", "f.pgm", {pos(rng), pos(rng), ext(rng), ext(rng)}, dist(rng)};
    if (clip_to(f.bbox, 96, 96).w == 0 || clip_to(f.bbox, 96, 96).h == 0) continue;
    const ImageTensor img(1, 96, 96, 0.5f);
    const auto full = build_mask(f, 96, 96);
    const auto r = center_crop(img, full, f.bbox, 32);
    AnnotatedFrame shifted = f;
    shifted.bbox.x -= r.window.x;
    shifted.bbox.y -= r.window.y;
    if (clip_to(shifted.bbox, 32, 32).w == 0 || clip_to(shifted.bbox, 32, 32).h == 0) continue;
    CHECK(build_mask(shifted, 32, 32) == r.mask);
  }
}

TEST_CASE("gaussian_smooth of a uniform mask is unchanged") {
  const DepthMask m(20, 17, 3.0f);
  const auto s = gaussian_smooth(m, 2.0, 9);
  for (float v : s.data()) CHECK(v == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("gaussian_smooth of a step edge is a monotone ramp within range") {
  DepthMask m(8, 32);
  for (int y = 0; y < 8; ++y) {
    for (int x = 16; x < 32; ++x) m.at(y, x) = 4.0f;
  }
  const auto s = gaussian_smooth(m, 2.0, 9);
  for (int y = 0; y < 8; ++y) {
    for (int x = 1; x < 32; ++x) CHECK(s.at(y, x) >= s.at(y, x - 1));
  }
  CHECK(s.at(0, 15) > 0.0f);
  CHECK(s.at(0, 16) < 4.0f);
  for (float v : s.data()) CHECK((v >= 0.0f && v <= 4.0f));
}

TEST_CASE("gaussian_smooth matches a direct 2-D convolution") {
  DepthMask m(9, 9);
  for (int y = 0; y < 9; ++y) {
    for (int x = 0; x < 9; ++x) m.at(y, x) = static_cast<float>((x * 7 + y * 3) % 5);
  }
  const auto got = gaussian_smooth(m, 1.0, 5);
  const auto want = oracle::gaussian_2d(m, 1.0, 5);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(got.data()[i] - want.data()[i]) <= 1e-5);
  }
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto r = oracle::random_mask(rng, 3 + trial, 12, true);
    const auto a = gaussian_smooth(r, 2.0, 9);
    const auto b = oracle::gaussian_2d(r, 2.0, 9);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) <= 1e-5);
  }
}

TEST_CASE("gaussian_smooth preserves the mean of an interior region") {
  std::mt19937_64 rng(12);
  const auto m = oracle::random_mask(rng, 64, 64, true);
  const auto s = gaussian_smooth(m, 2.0, 9);
  double in = 0.0, out = 0.0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double wgt = std::exp(-0.5 * ((y - 31.5) * (y - 31.5) + (x - 31.5) * (x - 31.5)) /
                                  (8.0 * 8.0));
      in += wgt * m.at(y, x);
      out += wgt * s.at(y, x);
    }
  }
  DepthMask block(64, 64, 2.0f);
  for (int y = 20; y < 44; ++y) {
    for (int x = 20; x < 44; ++x) block.at(y, x) = static_cast<float>((x + y) % 5);
  }
  const auto sb = gaussian_smooth(block, 2.0, 9);
  double a = 0.0, b = 0.0;
  for (int y = 12; y < 52; ++y) {
    for (int x = 12; x < 52; ++x) {
      a += block.at(y, x);
      b += sb.at(y, x);
    }
  }
  CHECK(std::abs(a - b) / (40.0 * 40.0) <= 1e-4);
  CHECK(std::isfinite(in - out));
}

TEST_CASE("gaussian_smooth argument checks") {
  const DepthMask m(4, 4);
  CHECK_THROWS_AS(gaussian_smooth(m, 2.0, 8), ValueError);
  CHECK_THROWS_AS(gaussian_smooth(m, 0.0, 9), ValueError);
}

TEST_CASE("pinhole apparent size") {
  SynthParams p;
  CHECK(apparent_size_px(p, 600.0) == doctest::Approx(24.0));
}

TEST_CASE("synth_scene is deterministic in the generator state") {
  SynthParams p;
  p.image_size = 128;
  auto r1 = frame_rng(42, 3);
  auto r2 = frame_rng(42, 3);
  const auto a = synth_scene(p, r1);
  const auto b = synth_scene(p, r2);
  CHECK(a.image.data() == b.image.data());
  CHECK(a.frame == b.frame);
  auto r3 = frame_rng(42, 4);
  CHECK(synth_scene(p, r3).image.data() != a.image.data());
}

TEST_CASE("synth_scene distances cover all classes") {
  const SynthParams p;
  std::array<int, 5> counts{};
  for (int i = 0; i < 1000; ++i) {
    auto rng = frame_rng(1, static_cast<std::uint64_t>(i));
    const auto s = synth_scene(p, rng);
    CHECK(s.frame.distance_m >= p.min_distance_m);
    CHECK(s.frame.distance_m <= p.max_distance_m);
    ++counts[static_cast<std::size_t>(bin_distance(s.frame.distance_m))];
  }
  for (int c : counts) CHECK(c > 0);
}

TEST_CASE("synth_scene bbox is tight around the silhouette") {
  SynthParams p;
  p.image_size = 128;
  p.noise_std = 0.0;
  for (int i = 0; i < 50; ++i) {
    auto rng = frame_rng(9, static_cast<std::uint64_t>(i));
    const auto s = synth_scene(p, rng);
    const BBox b = s.frame.bbox;
    CHECK(b.w > 0);
    CHECK(b.h > 0);
    CHECK(b.x >= 0);
    CHECK(b.y >= 0);
    CHECK(b.right() <= 128);
    CHECK(b.bottom() <= 128);
    bool top = false, bottom = false, left = false, right = false;
    for (int y = 0; y < 128; ++y) {
      for (int x = 0; x < 128; ++x) {
        if (s.image.at(0, y, x) >= 0.35f) continue;
        CHECK((x >= b.x && x < b.right() && y >= b.y && y < b.bottom()));
        top = top || y == b.y;
        bottom = bottom || y == b.bottom() - 1;
        left = left || x == b.x;
        right = right || x == b.right() - 1;
      }
    }
    CHECK((top && bottom && left && right));
  }
}

TEST_CASE("synth_scene pixels are multiples of 1/255") {
  SynthParams p;
  p.image_size = 64;
  auto rng = frame_rng(5, 0);
  const auto s = synth_scene(p, rng);
  for (float v : s.image.data()) {
    const double q = v * 255.0;
    CHECK(std::abs(q - std::round(q)) < 1e-3);
  }
}

TEST_CASE("synth_scene fails when the silhouette can never be visible") {
  SynthParams p;
  p.image_size = 64;
  p.min_distance_m = 50000.0;
  p.max_distance_m = 60000.0;
  auto rng = frame_rng(1, 0);
  CHECK_THROWS_AS(synth_scene(p, rng), ValueError);
  p = SynthParams{};
  p.focal_px = 0.0;
  CHECK_THROWS_AS(p.validate(), ValueError);
}

TEST_CASE("manifest round trip") {
  const auto dir = scratch_dir("roundtrip");
  const std::vector<AnnotatedFrame> frames{
      {"f000001", "images/f000001.pgm", {10, 20, 30, 40}, 123.456789012345},
      {"f000002", "/abs/img.pgm", {0, 0, 1, 1}, 0.1},
      {"f000003", "x.pgm", {-3, 5, 7, 9}, 700.0},
  };
  write_manifest(frames, dir / "m.tsv");
  CHECK(load_manifest(dir / "m.tsv") == frames);
  CHECK(resolve_image_path(dir / "m.tsv", frames[0]) == dir / "images/f000001.pgm");
  CHECK(resolve_image_path(dir / "m.tsv", frames[1]) == "/abs/img.pgm");
}

TEST_CASE("manifest edge cases and errors") {
  const auto dir = scratch_dir("errors");
  write_text(dir / "empty.tsv", "");
  CHECK(load_manifest(dir / "empty.tsv").empty());

  write_text(dir / "one.tsv", "a\tb.pgm\t1\t2\t3\t4\t512.5\n");
  const auto one = load_manifest(dir / "one.tsv");
  REQUIRE(one.size() == 1);
  CHECK(one[0] == AnnotatedFrame{"a", "b.pgm", {1, 2, 3, 4}, 512.5});

  write_text(dir / "neg.tsv", "a\tb.pgm\t1\t2\t3\t4\t10\nc\td.pgm\t1\t2\t3\t4\t-5\n");
  const auto msg = error_of(dir / "neg.tsv");
  CHECK(msg.find("distance_m") != std::string::npos);
  CHECK(msg.find(":2:") != std::string::npos);

  write_text(dir / "short.tsv", "a\tb.pgm\t1\t2\t3\n");
  CHECK(error_of(dir / "short.tsv").find(":1:") != std::string::npos);
  write_text(dir / "badint.tsv", "a\tb.pgm\t1\tq\t3\t4\t5\n");
  CHECK(error_of(dir / "badint.tsv").find("'y'") != std::string::npos);
  write_text(dir / "zero.tsv", "a\tb.pgm\t1\t2\t0\t4\t5\n");
  CHECK(error_of(dir / "zero.tsv").find("'w'") != std::string::npos);
  CHECK_THROWS_AS(load_manifest(dir / "missing.tsv"), IoError);
}
