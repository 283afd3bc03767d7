#include "deepscan/sim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::sim {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Plane {
  std::size_t width, height;
  double* data;

  double& at(std::ptrdiff_t y, std::ptrdiff_t x) { return data[static_cast<std::size_t>(y) * width + x]; }
};

void add_background(Plane& p, Rng& rng) {
  const double base = rng.uniform(0.15, 0.35);
  struct Wave {
    double amp, fx, fy, phase;
  };
  Wave waves[3];
  for (auto& w : waves) {
    w = {rng.uniform(0.03, 0.08), rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0), rng.uniform(0.0, kTwoPi)};
  }
  for (std::size_t y = 0; y < p.height; ++y) {
    for (std::size_t x = 0; x < p.width; ++x) {
      double v = base;
      for (const auto& w : waves) {
        v += w.amp * std::sin(kTwoPi * (w.fx * static_cast<double>(x) / static_cast<double>(p.width) +
                                        w.fy * static_cast<double>(y) / static_cast<double>(p.height)) +
                              w.phase);
      }
      p.at(static_cast<std::ptrdiff_t>(y), static_cast<std::ptrdiff_t>(x)) = v;
    }
  }
}

// Elliptical cell: Gaussian body with a bright membrane ring at unit
// elliptical radius.
void add_cell(Plane& p, Rng& rng, double scale) {
  const double cx = rng.uniform(0.0, static_cast<double>(p.width));
  const double cy = rng.uniform(0.0, static_cast<double>(p.height));
  const double a = std::max(1.5, rng.uniform(0.03, 0.08) * scale);
  const double b = a * rng.uniform(0.6, 1.0);
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double body = rng.uniform(0.3, 1.0);
  const double ring = rng.uniform(0.8, 2.0);
  const double ct = std::cos(theta), st = std::sin(theta);
  const double reach = 1.6 * a;
  const auto y0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(cy - reach)));
  const auto y1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(p.height) - 1,
                                           static_cast<std::ptrdiff_t>(std::ceil(cy + reach)));
  const auto x0 = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::floor(cx - reach)));
  const auto x1 = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(p.width) - 1,
                                           static_cast<std::ptrdiff_t>(std::ceil(cx + reach)));
  for (std::ptrdiff_t y = y0; y <= y1; ++y) {
    for (std::ptrdiff_t x = x0; x <= x1; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double u = (dx * ct + dy * st) / a;
      const double v = (-dx * st + dy * ct) / b;
      const double q = std::sqrt(u * u + v * v);
      p.at(y, x) += body * std::exp(-2.0 * q * q) + ring * std::exp(-(q - 1.0) * (q - 1.0) / (2.0 * 0.15 * 0.15));
    }
  }
}

// Curved stroke of Gaussian cross-section, accumulated from unit-step splats
// so its ridge height is close to `amp` wherever it does not cross itself.
void add_filament(Plane& p, Rng& rng, double scale) {
  double px = rng.uniform(0.0, static_cast<double>(p.width));
  double py = rng.uniform(0.0, static_cast<double>(p.height));
  double heading = rng.uniform(0.0, kTwoPi);
  const double length = rng.uniform(0.15, 0.5) * scale;
  const double bend = rng.uniform(-2.0, 2.0) / length;
  const double sigma = rng.uniform(0.7, 1.4);
  const double amp = rng.uniform(0.8, 2.0);
  const double weight = amp / (sigma * std::sqrt(kTwoPi));
  const auto reach = static_cast<std::ptrdiff_t>(std::ceil(3.0 * sigma));
  const auto steps = static_cast<std::size_t>(length);
  for (std::size_t s = 0; s < steps; ++s) {
    const auto iy = static_cast<std::ptrdiff_t>(std::lround(py));
    const auto ix = static_cast<std::ptrdiff_t>(std::lround(px));
    for (std::ptrdiff_t y = iy - reach; y <= iy + reach; ++y) {
      if (y < 0 || y >= static_cast<std::ptrdiff_t>(p.height)) continue;
      for (std::ptrdiff_t x = ix - reach; x <= ix + reach; ++x) {
        if (x < 0 || x >= static_cast<std::ptrdiff_t>(p.width)) continue;
        const double dx = static_cast<double>(x) - px, dy = static_cast<double>(y) - py;
        p.at(y, x) += weight * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      }
    }
    heading += bend;
    px += std::cos(heading);
    py += std::sin(heading);
  }
}

}  // namespace

Scene generate_scene(std::uint64_t seed, std::size_t width, std::size_t height, std::size_t channels) {
  if (width < 16 || height < 16) {
    throw RangeError("scene dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                     " below the 16x16 minimum");
  }
  if (channels == 0) throw RangeError("scene needs at least one channel");
  Scene scene{width, height, channels, seed, std::vector<double>(width * height * channels)};
  const double scale = static_cast<double>(std::min(width, height));
  for (std::size_t c = 0; c < channels; ++c) {
    Plane plane{width, height, scene.density.data() + c * width * height};
    Rng rng(stream_key(seed, c));
    add_background(plane, rng);
    const std::size_t count = 20 + rng.below(61);
    for (std::size_t i = 0; i < count; ++i) {
      if (c % 2 == 0) {
        add_cell(plane, rng, scale);
      } else {
        add_filament(plane, rng, scale);
      }
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < width * height; ++i) {
      plane.data[i] = std::max(0.0, plane.data[i]);
      sum += plane.data[i];
    }
    const double mean = sum / static_cast<double>(width * height);
    for (std::size_t i = 0; i < width * height; ++i) plane.data[i] /= mean;
  }
  return scene;
}

}  // namespace deepscan::sim
