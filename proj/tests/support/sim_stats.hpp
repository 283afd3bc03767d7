#pragma once

#include <cstdint>
#include <vector>

#include "deepscan/sim/acquisition.hpp"
#include "deepscan/sim/scene.hpp"

namespace testing {

inline deepscan::sim::Scene uniform_scene(std::size_t w, std::size_t h, double density, std::uint64_t id = 1) {
  return {w, h, 1, id, std::vector<double>(w * h, density)};
}

struct Moments {
  double mean = 0, var = 0;
};

// Sample mean and unbiased variance.
template <typename Range>
Moments moments(const Range& values) {
  Moments m;
  double n = 0;
  for (double v : values) {
    m.mean += v;
    n += 1;
  }
  m.mean /= n;
  for (double v : values) m.var += (v - m.mean) * (v - m.mean);
  m.var /= n - 1;
  return m;
}

// Reference power with a 16-bit ceiling: density 1 gives Poisson(lambda).
inline deepscan::sim::AcquisitionConfig config_for_rate(double lambda) {
  deepscan::sim::AcquisitionConfig c;
  c.power_mw = c.ref_power_mw;
  c.brightness = lambda;
  c.bits = 16;
  return c;
}

}  // namespace testing
