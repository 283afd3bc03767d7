#include <doctest.h>

#include <cmath>
#include <numeric>

#include "deepscan/io/mpi.hpp"
#include "deepscan/metrics/metrics.hpp"
#include "deepscan/util/error.hpp"
#include "oracles.hpp"
#include "random_tensor.hpp"
#include "temp_dir.hpp"

using namespace deepscan;
using namespace deepscan::metrics;
using io::Image;

namespace {

Image constant(std::size_t w, std::size_t h, float v) {
  auto img = Image::float32(w, h, 1);
  for (auto& s : img.samples()) s = v;
  return img;
}

SsimConfig with_range(double L) {
  SsimConfig c;
  c.dynamic_range = L;
  return c;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mse examples") {
  auto a = Image::float32(2, 1, 1), b = Image::float32(2, 1, 1);
  a.at(0, 0, 0) = 0;
  a.at(0, 0, 1) = 2;
  b.at(0, 0, 0) = 1;
  b.at(0, 0, 1) = 3;
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(a, b) == 1.0);
  CHECK_THROWS_AS(mse(a, Image::float32(1, 2, 1)), ShapeError);
}

TEST_CASE("mse matches a per-pixel loop") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto a = testing::random_image(64, 64, 2, seed), b = testing::random_image(64, 64, 2, seed + 50);
    double s = 0;
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t y = 0; y < 64; ++y)
        for (std::size_t x = 0; x < 64; ++x) {
          const double d = static_cast<double>(a.at(c, y, x)) - b.at(c, y, x);
          s += d * d;
        }
    CHECK(std::abs(mse(a, b) - s / (2 * 64 * 64)) <= 1e-9);
  }
}

TEST_CASE("mse is invariant to a shared offset and positive for any change") {
  auto a = testing::random_counts(20, 20, 1, 1), b = testing::random_counts(20, 20, 1, 2);
  const double before = mse(a, b);
  for (auto& v : a.samples()) v += 64.0f;
  for (auto& v : b.samples()) v += 64.0f;
  CHECK(mse(a, b) == before);
  auto c = a;
  c.at(0, 3, 4) += 1.0f;
  CHECK(mse(a, c) > 0.0);
}

TEST_CASE("gaussian window sums to one") {
  const auto g = gaussian_window(11, 1.5);
  CHECK(g.size() == 11);
  CHECK(std::accumulate(g.begin(), g.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g[5] > g[4]);
  CHECK(g[0] == doctest::Approx(g[10]));
}

TEST_CASE("ssim identities") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto x = testing::random_image(17 + seed, 23, 1 + seed % 2, seed);
    const auto y = testing::random_image(17 + seed, 23, 1 + seed % 2, seed + 99);
    CHECK(ssim(x, x, with_range(100)) == 1.0);
    const double ab = ssim(x, y, with_range(100)), ba = ssim(y, x, with_range(100));
    CHECK(std::abs(ab - ba) <= 1e-12);
    CHECK(ab >= -1.0);
    CHECK(ab <= 1.0);
  }
}

TEST_CASE("constant 0 vs constant L") {
  for (double L : {1.0, 255.0, 4095.0}) {
    const SsimConfig cfg = with_range(L);
    const double want = cfg.c1() / (L * L + cfg.c1());
    CHECK(std::abs(ssim(constant(16, 16, 0.0f), constant(16, 16, static_cast<float>(L)), cfg) - want) <= 1e-9);
  }
  CHECK(with_range(1.0).c1() / (1.0 + with_range(1.0).c1()) == doctest::Approx(9.999e-5).epsilon(1e-4));
}

TEST_CASE("any single-pixel change drops ssim below one") {
  const auto x = testing::random_image(24, 24, 1, 4);
  Rng rng(1);
  for (int t = 0; t < 20; ++t) {
    auto y = x;
    y.at(0, rng.below(24), rng.below(24)) += 5.0f;
    CHECK(ssim(x, y, with_range(100)) < 1.0);
  }
}

TEST_CASE("ssim matches the direct-formula oracle") {
  Rng rng(77);
  for (int t = 0; t < 20; ++t) {
    const std::size_t w = 8 + rng.below(30), h = 8 + rng.below(30), c = 1 + rng.below(2);
    const auto a = testing::random_image(w, h, c, 1000 + t, 0.0, 255.0);
    auto b = a;
    Rng noise(2000 + t);
    for (auto& v : b.samples()) v += static_cast<float>(noise.uniform(-40.0, 40.0));
    const double got = ssim(a, b, with_range(255));
    const double want = oracle::ssim(a, b, 255);
    INFO(w, "x", h, "x", c);
    CHECK(std::abs(got - want) <= 1e-6);
  }
}

TEST_CASE("ssim map geometry and mean") {
  const auto a = testing::random_image(20, 12, 2, 1), b = testing::random_image(20, 12, 2, 2);
  Image map;
  const double s = ssim(a, b, with_range(100), &map);
  REQUIRE(map.same_geometry(a));
  double sum = 0;
  for (float v : map.samples()) sum += v;
  CHECK(sum / map.samples().size() == doctest::Approx(s).epsilon(1e-6));
}

TEST_CASE("ssim errors") {
  const auto a = testing::random_image(12, 12, 1, 1);
  CHECK_THROWS_AS(ssim(a, testing::random_image(12, 13, 1, 1), with_range(1)), ShapeError);
  CHECK_THROWS_AS(ssim(a, a, with_range(0.0)), RangeError);
  CHECK_THROWS_AS(ssim(a, a, with_range(-1.0)), RangeError);
}

TEST_CASE("ensemble average examples") {
  const auto a = testing::random_image(9, 7, 2, 3);
  CHECK(bit_identical(ensemble_average(a, a), io::to_float32(a)));
  const auto avg = ensemble_average(constant(4, 4, 0), constant(4, 4, 2));
  for (float v : avg.samples()) CHECK(v == 1.0f);
  CHECK_THROWS_AS(ensemble_average(a, constant(4, 4, 0)), ShapeError);
}

TEST_CASE("evaluate_set over a directory") {
  const auto root = testing::fresh_dir("metrics_eval");
  std::filesystem::create_directories(root / "gt");
  std::filesystem::create_directories(root / "pred");
  std::vector<Image> truths;
  for (int i = 0; i < 31; ++i) {
    truths.push_back(testing::random_counts(16, 16, 1, i, 12));
    const auto stem = "img" + std::to_string(100 + i) + ".mpi";
    io::write_mpi(truths.back(), root / "gt" / stem);
    io::write_mpi(truths.back(), root / "pred" / stem);
  }
  auto identical = evaluate_set(root / "pred", root / "gt");
  CHECK(identical.images.size() == 31);
  CHECK(*identical.mean_mse() == 0.0);
  CHECK(*identical.mean_ssim() == 1.0);

  auto noisy = testing::random_counts(16, 16, 1, 500, 12);
  io::write_mpi(noisy, root / "pred" / "img105.mpi");
  const auto r = evaluate_set(root / "pred", root / "gt");
  double sm = 0, ss = 0;
  for (const auto& rec : r.images) {
    sm += rec.mse;
    ss += rec.ssim;
  }
  CHECK(*r.mean_mse() == doctest::Approx(sm / 31).epsilon(1e-12));
  CHECK(*r.mean_ssim() == doctest::Approx(ss / 31).epsilon(1e-12));
  CHECK(r.images[5].name == "img105");
  CHECK(r.images[5].mse == doctest::Approx(mse(noisy, truths[5])));
  const double L = max_sample(truths);
  CHECK(r.images[5].ssim == doctest::Approx(ssim(noisy, truths[5], with_range(L))).epsilon(1e-12));
  const auto custom = evaluate_set(root / "pred", root / "gt", 4095.0);
  CHECK(custom.images[5].ssim == doctest::Approx(ssim(noisy, truths[5], with_range(4095))).epsilon(1e-12));

  const std::vector<std::string> only{"img101", "img105"};
  CHECK(evaluate_set(root / "pred", root / "gt", {}, only).images.size() == 2);

  io::write_mpi(noisy, root / "pred" / "stray.mpi");
  try {
    evaluate_set(root / "pred", root / "gt");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("stray") != std::string::npos);
  }
}

}  // TEST_SUITE
