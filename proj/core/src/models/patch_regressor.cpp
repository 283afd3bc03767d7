#include "deepscan/models/patch_regressor.hpp"

#include <string>

#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::models {

using nn::LayerKind;
using nn::LayerSpec;

void PatchRegressorConfig::validate() const {
  if (in_channels != 1 && in_channels != 2) {
    throw RangeError("patch regressor: unsupported channel count " + std::to_string(in_channels) + " (expected 1 or 2)");
  }
  if (patch == 0 || conv1_filters == 0 || conv2_filters == 0 || conv1_kernel == 0 || conv2_kernel == 0) {
    throw RangeError("patch regressor: patch size, filters and kernels must be positive");
  }
  for (auto h : hidden) {
    if (h == 0) throw RangeError("patch regressor: hidden sizes must be positive");
  }
}

PatchRegressorConfig PatchRegressorConfig::tiny(std::size_t in_channels, std::uint64_t seed) {
  PatchRegressorConfig c;
  c.in_channels = in_channels;
  c.patch = 8;
  c.conv1_filters = 4;
  c.conv2_filters = 3;
  c.hidden = {16, 8, 4};
  c.seed = seed;
  return c;
}

template <typename T>
PatchRegressor<T>::PatchRegressor(PatchRegressorConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto& c = config_;
  std::uint64_t index = 0;
  auto add = [&](LayerSpec spec) { layers_.add(spec, stream_key(c.seed, index++)); };
  add({LayerKind::conv2d, "conv1", c.in_channels, c.conv1_filters, c.conv1_kernel});
  add({LayerKind::batchnorm, "bn1", c.conv1_filters});
  add({LayerKind::relu, "relu1"});
  add({LayerKind::conv2d, "conv2", c.conv1_filters, c.conv2_filters, c.conv2_kernel});
  add({LayerKind::relu, "relu2"});
  add({LayerKind::flatten, "flatten"});
  std::size_t width = c.conv2_filters * c.patch * c.patch;
  for (std::size_t i = 0; i < c.hidden.size(); ++i) {
    add({LayerKind::dense, "dense" + std::to_string(i + 1), width, c.hidden[i]});
    add({LayerKind::relu, "relu" + std::to_string(i + 3)});
    width = c.hidden[i];
  }
  add({LayerKind::dense, "dense" + std::to_string(c.hidden.size() + 1), width, c.in_channels});
  if (c.relu_head) add({LayerKind::relu, "relu_head"});
  layers_.front().set_input_grad(false);
}

template <typename T>
void PatchRegressor<T>::check_input(const nn::BasicTensor<T>& x) const {
  const nn::Shape want{x.rank() == 4 ? x.dim(0) : 0, config_.in_channels, config_.patch, config_.patch};
  if (x.rank() != 4 || x.shape() != want) {
    throw ShapeError("patch regressor: expected input [N, " + std::to_string(config_.in_channels) + ", " +
                     std::to_string(config_.patch) + ", " + std::to_string(config_.patch) + "], got " +
                     nn::shape_string(x.shape()));
  }
}

template <typename T>
NetOutput<T> PatchRegressor<T>::forward(const nn::BasicTensor<T>& x, nn::Mode mode) {
  check_input(x);
  return {layers_.forward(x, mode), {}};
}

template <typename T>
NetOutput<T> PatchRegressor<T>::infer(const nn::BasicTensor<T>& x) const {
  check_input(x);
  return {layers_.infer(x), {}};
}

template <typename T>
void PatchRegressor<T>::backward(const nn::BasicTensor<T>& grad_prediction, const nn::BasicTensor<T>&) {
  layers_.backward(grad_prediction);
}

template <typename T>
std::vector<nn::Param<T>> PatchRegressor<T>::params() {
  std::vector<nn::Param<T>> out;
  layers_.append_params(out);
  return out;
}

template <typename T>
std::vector<nn::Buffer<T>> PatchRegressor<T>::buffers() {
  std::vector<nn::Buffer<T>> out;
  layers_.append_buffers(out);
  return out;
}

template <typename T>
std::vector<LayerSpec> PatchRegressor<T>::layer_specs() const {
  std::vector<LayerSpec> out;
  layers_.append_specs(out);
  return out;
}

template class PatchRegressor<float>;
template class PatchRegressor<double>;

}  // namespace deepscan::models
