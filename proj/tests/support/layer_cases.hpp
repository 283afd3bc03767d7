#pragma once

#include <vector>

#include "deepscan/nn/layers.hpp"

namespace testing {

struct LayerCase {
  deepscan::nn::LayerSpec spec;
  deepscan::nn::Shape input;
};

// One grad-check configuration per layer kind; conv covers odd and even kernels.
inline std::vector<LayerCase> layer_cases() {
  using deepscan::nn::LayerKind;
  return {
      {{LayerKind::conv2d, "conv3", 2, 3, 3}, {2, 2, 6, 6}},
      {{LayerKind::conv2d, "conv4", 2, 3, 4}, {2, 2, 6, 5}},
      {{LayerKind::conv2d, "conv5", 1, 2, 5}, {1, 1, 7, 7}},
      {{LayerKind::batchnorm, "bn", 3}, {4, 3, 3, 3}},
      {{LayerKind::dense, "dense", 6, 4}, {3, 6}},
      {{LayerKind::relu, "relu"}, {2, 3, 4, 4}},
      {{LayerKind::maxpool2, "pool"}, {2, 2, 4, 6}},
      {{LayerKind::upsample2, "up"}, {2, 2, 3, 2}},
      {{LayerKind::flatten, "flat"}, {2, 3, 2, 2}},
      {{LayerKind::concat, "cat", 2}, {2, 5, 3, 3}},
      {{LayerKind::residual_add, "res"}, {2, 4, 3, 3}},
  };
}

}  // namespace testing
