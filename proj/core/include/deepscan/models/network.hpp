#pragma once

#include <vector>

#include "deepscan/nn/layers.hpp"
#include "deepscan/nn/tensor.hpp"

namespace deepscan::models {

/// Network outputs. `scale` holds the raw (pre-softplus) Laplace scale map
/// for probabilistic heads and is empty otherwise.
template <typename T>
struct NetOutput {
  nn::BasicTensor<T> prediction;
  nn::BasicTensor<T> scale;
};

/// Common surface of the trainable architectures.
template <typename T>
class Network {
 public:
  virtual ~Network() = default;

  virtual NetOutput<T> forward(const nn::BasicTensor<T>& x, nn::Mode mode) = 0;
  /// Eval-mode forward without side effects; safe to call concurrently.
  virtual NetOutput<T> infer(const nn::BasicTensor<T>& x) const = 0;
  /// Back-propagates output gradients from the last train-mode forward and
  /// accumulates parameter gradients. `grad_scale` may be empty.
  virtual void backward(const nn::BasicTensor<T>& grad_prediction, const nn::BasicTensor<T>& grad_scale) = 0;

  virtual std::vector<nn::Param<T>> params() = 0;
  virtual std::vector<nn::Buffer<T>> buffers() = 0;
  virtual std::vector<nn::LayerSpec> layer_specs() const = 0;

  void zero_grad() {
    for (auto& p : params()) p.grad->fill(T(0));
  }
};

}  // namespace deepscan::models
