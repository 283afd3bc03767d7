#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deepscan/nn/layers.hpp"

namespace deepscan::optim {

struct AdamHyper {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

/// First and second moments mirror the parameter list; t counts steps taken.
template <typename T>
struct AdamState {
  std::vector<nn::BasicTensor<T>> m;
  std::vector<nn::BasicTensor<T>> v;
  std::int64_t t = 0;
};

/// One bias-corrected Adam update of every parameter from its gradient:
/// theta -= lr * m_hat / (sqrt(v_hat) + eps). Moments are created on the
/// first call. Gradients are checked for finiteness before anything changes.
template <typename T>
void adam_step(std::span<const nn::Param<T>> params, AdamState<T>& state, const AdamHyper& hyper);

}  // namespace deepscan::optim
