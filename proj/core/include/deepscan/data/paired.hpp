#pragma once

#include <string>

#include "deepscan/io/image.hpp"

namespace deepscan::data {

/// A degraded acquisition and its high-quality reference.
struct PairedSample {
  io::Image source;
  io::Image target;
  std::string name;

  /// Throws ShapeError unless source and target share geometry.
  void validate() const;
};

}  // namespace deepscan::data
