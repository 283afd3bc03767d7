#include <doctest.h>

#include <cmath>
#include <numeric>

#include "deepscan/io/bytes.hpp"
#include "deepscan/io/mpi.hpp"
#include "deepscan/sim/acquisition.hpp"
#include "deepscan/sim/scene.hpp"
#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"
#include "sim_stats.hpp"
#include "temp_dir.hpp"

using namespace deepscan;
using namespace deepscan::sim;

using testing::config_for_rate;
using testing::moments;
using testing::uniform_scene;

TEST_SUITE("sim") {

TEST_CASE("scene determinism and scaling") {
  const auto a = generate_scene(7, 48, 40, 2);
  const auto b = generate_scene(7, 48, 40, 2);
  CHECK(a.density == b.density);
  CHECK(generate_scene(8, 48, 40, 2).density != a.density);
  CHECK(*std::min_element(a.density.begin(), a.density.end()) >= 0.0);
  for (double v : a.density) REQUIRE(std::isfinite(v));
  for (std::size_t c = 0; c < 2; ++c) {
    const double sum = std::accumulate(a.density.begin() + c * 48 * 40, a.density.begin() + (c + 1) * 48 * 40, 0.0);
    CHECK(std::abs(sum / (48 * 40) - 1.0) <= 1e-9);
  }
  CHECK_THROWS_AS(generate_scene(1, 15, 32, 1), RangeError);
}

TEST_CASE("acquisition config validation") {
  CHECK_NOTHROW(AcquisitionConfig{}.validate());
  AcquisitionConfig c;
  c.power_mw = 0;
  CHECK_THROWS_AS(c.validate(), RangeError);
  c = {};
  c.frames_used = 71;
  CHECK_THROWS_AS(c.validate(), RangeError);
  c = {};
  c.frames_used = 0;
  CHECK_THROWS_AS(c.validate(), RangeError);
  CHECK(AcquisitionConfig::defaults(AcquisitionMode::power).power_mw == 50.0);
  CHECK(AcquisitionConfig::defaults(AcquisitionMode::frames).power_mw == kFramesPowerMw);
  CHECK(parse_acquisition_mode("frames") == AcquisitionMode::frames);
  CHECK_FALSE(parse_acquisition_mode("power2").has_value());
}

TEST_CASE("square law: 50 vs 300 mW is exactly 1/36") {
  AcquisitionConfig lo, hi;
  lo.power_mw = 50;
  hi.power_mw = 300;
  CHECK(expected_rate(lo, 1.0) / expected_rate(hi, 1.0) == doctest::Approx(1.0 / 36.0).epsilon(1e-15));
  CHECK(expected_rate(hi, 2.5) == doctest::Approx(500.0));
}

TEST_CASE("zero density gives zero counts") {
  const auto frame = acquire_frame(uniform_scene(32, 32, 0.0), config_for_rate(200), 3);
  for (float v : frame.samples()) CHECK(v == 0.0f);
}

TEST_CASE("poisson moments lie within 3 sigma Monte Carlo bounds") {
  const double n = 10000;
  for (double lambda : {1.0, 9.0, 200.0}) {
    const auto frame = acquire_frame(uniform_scene(100, 100, 1.0), config_for_rate(lambda), 0);
    const auto m = moments(frame.samples());
    INFO("lambda ", lambda, " mean ", m.mean, " var ", m.var);
    CHECK(std::abs(m.mean - lambda) <= 3 * std::sqrt(lambda / n));
    CHECK(std::abs(m.var - lambda) <= 3 * std::sqrt((lambda + 2 * lambda * lambda) / n));
  }
}

TEST_CASE("poisson sampler moments at small and large rates") {
  for (double lambda : {0.3, 1.0, 9.0, 29.0, 200.0, 3000.0}) {
    Rng rng(stream_key(5, static_cast<std::uint64_t>(lambda * 10)));
    std::vector<double> draws(20000);
    for (auto& d : draws) d = static_cast<double>(poisson(rng, lambda));
    const auto m = moments(draws);
    INFO("lambda ", lambda);
    CHECK(std::abs(m.mean - lambda) <= 3 * std::sqrt(lambda / 20000));
    CHECK(std::abs(m.var - lambda) <= 3 * std::sqrt((lambda + 2 * lambda * lambda) / 20000));
  }
}

TEST_CASE("frames are reproducible out of order and independent") {
  const auto scene = uniform_scene(100, 100, 1.0);
  const auto cfg = config_for_rate(9);
  const auto f3 = acquire_frame(scene, cfg, 3);
  const auto f0 = acquire_frame(scene, cfg, 0);
  CHECK(bit_identical(acquire_frame(scene, cfg, 3), f3));
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < 10000; ++i) {
    const double a = f0.samples()[i] - 9.0, b = f3.samples()[i] - 9.0;
    sab += a * b;
    saa += a * a;
    sbb += b * b;
  }
  CHECK(std::abs(sab / std::sqrt(saa * sbb)) < 0.05);
  // Different scenes with the same density do not share noise.
  CHECK_FALSE(bit_identical(acquire_frame(uniform_scene(100, 100, 1.0, 2), cfg, 3), f3));
}

TEST_CASE("frame averaging") {
  const auto scene = uniform_scene(100, 100, 1.0);
  const auto cfg = config_for_rate(9);
  std::vector<io::Image> frames;
  for (std::uint64_t f = 0; f < 70; ++f) frames.push_back(acquire_frame(scene, cfg, f));

  const auto one = average_frames(frames, 1);
  CHECK(one.format() == io::SampleFormat::float32);
  for (std::size_t i = 0; i < 10000; ++i) REQUIRE(one.samples()[i] == frames[0].samples()[i]);

  for (std::size_t k : {7, 15, 70}) {
    const auto m = moments(average_frames(frames, k).samples());
    INFO("k ", k, " var ", m.var);
    CHECK(std::abs(m.var / (9.0 / k) - 1.0) <= 0.10);
  }
  CHECK_THROWS_AS(average_frames(frames, 0), RangeError);
  CHECK_THROWS_AS(average_frames(frames, 71), RangeError);
  frames[2] = io::Image::uint16(10, 10, 1, 16);
  CHECK_THROWS_AS(average_frames(frames, 3), ShapeError);
}

TEST_CASE("counts at the bit ceiling are reported, not clamped") {
  AcquisitionConfig cfg = config_for_rate(5000);
  cfg.bits = 12;
  CHECK_THROWS_AS(acquire_frame(uniform_scene(16, 16, 1.0), cfg, 0), RangeError);
}

TEST_CASE("power mode intensity ratio is 36 within 5 percent") {
  const auto scene = generate_scene(11, 64, 64, 2);
  AcquisitionConfig lo;
  lo.power_mw = 50;
  AcquisitionConfig hi = lo;
  hi.power_mw = 300;
  const auto s = moments(acquire_frame(scene, lo, 0).samples());
  const auto t = moments(acquire_frame(scene, hi, 1).samples());
  CHECK(std::abs(t.mean / s.mean / 36.0 - 1.0) <= 0.05);
}

TEST_CASE("target SNR exceeds source SNR in both modes") {
  const auto scene = uniform_scene(64, 64, 1.0);
  auto snr = [](const io::Image& img) {
    const auto m = moments(img.samples());
    return m.mean / std::sqrt(m.var);
  };
  AcquisitionConfig lo;
  lo.power_mw = 50;
  AcquisitionConfig hi = lo;
  hi.power_mw = 300;
  CHECK(snr(acquire_frame(scene, hi, 1)) > snr(acquire_frame(scene, lo, 0)));

  auto fc = AcquisitionConfig::defaults(AcquisitionMode::frames);
  std::vector<io::Image> frames;
  for (std::uint64_t f = 0; f < fc.frames_total; ++f) frames.push_back(acquire_frame(scene, fc, f));
  CHECK(snr(average_frames(frames, fc.frames_total)) > snr(average_frames(frames, fc.frames_used)));
}

TEST_CASE("paired dataset layout, determinism and manifest") {
  const auto a = testing::fresh_dir("sim_a");
  const auto b = testing::fresh_dir("sim_b");
  auto cfg = AcquisitionConfig::defaults(AcquisitionMode::power);
  cfg.seed = 5;
  const auto sa = make_paired_dataset(cfg, 3, 32, 24, 2, a);
  make_paired_dataset(cfg, 3, 32, 24, 2, b);
  CHECK(sa.pairs == 3);
  CHECK(sa.mean_target / sa.mean_source == doctest::Approx(36.0).epsilon(0.1));
  for (const char* f : {"source/img00000.mpi", "target/img00002.mpi", "manifest.json"}) {
    CHECK(io::read_file(a / f) == io::read_file(b / f));
  }
  const auto src = io::read_mpi(a / "source" / "img00001.mpi");
  CHECK(src.width() == 32);
  CHECK(src.height() == 24);
  CHECK(src.channels() == 2);
  CHECK(src.bits_per_sample() == 12);
  const auto m = read_manifest(a / "manifest.json");
  CHECK(m.n_images == 3);
  CHECK(m.width == 32);
  CHECK(m.channels == 2);
  CHECK(m.config.seed == 5);
  CHECK(m.config.power_mw == 50.0);
  CHECK(m.config.mode == AcquisitionMode::power);
}

TEST_CASE("frames mode with every frame used gives source == target") {
  const auto dir = testing::fresh_dir("sim_frames_all");
  auto cfg = AcquisitionConfig::defaults(AcquisitionMode::frames);
  cfg.frames_total = 10;
  cfg.frames_used = 10;
  make_paired_dataset(cfg, 2, 16, 16, 1, dir);
  for (const char* stem : {"img00000.mpi", "img00001.mpi"}) {
    CHECK(io::read_file(dir / "source" / stem) == io::read_file(dir / "target" / stem));
  }
}

TEST_CASE("frames mode sources average the first frames of the target stack") {
  const auto dir = testing::fresh_dir("sim_frames");
  auto cfg = AcquisitionConfig::defaults(AcquisitionMode::frames);
  cfg.frames_total = 9;
  cfg.frames_used = 3;
  make_paired_dataset(cfg, 1, 16, 16, 1, dir);
  const auto src = io::read_mpi(dir / "source" / "img00000.mpi");
  const auto tgt = io::read_mpi(dir / "target" / "img00000.mpi");
  CHECK(src.format() == io::SampleFormat::float32);
  double ms = 0, mt = 0;
  for (std::size_t i = 0; i < 256; ++i) {
    ms += src.samples()[i];
    mt += tgt.samples()[i];
    CHECK(src.samples()[i] * 3 == doctest::Approx(std::round(src.samples()[i] * 3)).epsilon(1e-5));
  }
  CHECK(ms / mt == doctest::Approx(1.0).epsilon(0.25));
}

}  // TEST_SUITE
