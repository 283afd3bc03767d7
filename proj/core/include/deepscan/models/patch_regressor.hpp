#pragma once

#include <cstdint>
#include <vector>

#include "deepscan/models/network.hpp"
#include "deepscan/models/sequential.hpp"

namespace deepscan::models {

struct PatchRegressorConfig {
  std::size_t in_channels = 2;
  std::size_t patch = 40;
  std::size_t conv1_filters = 64;
  std::size_t conv1_kernel = 4;
  std::size_t conv2_filters = 32;
  std::size_t conv2_kernel = 3;
  std::vector<std::size_t> hidden{1024, 512, 32};
  bool relu_head = false;
  std::uint64_t seed = 42;

  /// Throws RangeError for an unsupported channel count or empty sizes.
  void validate() const;
  /// Same layer kinds on an 8x8 patch with a handful of units, for
  /// whole-model gradient checks.
  static PatchRegressorConfig tiny(std::size_t in_channels, std::uint64_t seed);
};

/// conv -> batchnorm -> relu -> conv -> relu -> flatten -> dense chain with
/// relu between dense layers; the last dense layer emits one value per
/// channel for the patch's anchor pixel. Input [N, C, P, P], output [N, C].
template <typename T>
class PatchRegressor final : public Network<T> {
 public:
  explicit PatchRegressor(PatchRegressorConfig config);

  NetOutput<T> forward(const nn::BasicTensor<T>& x, nn::Mode mode) override;
  NetOutput<T> infer(const nn::BasicTensor<T>& x) const override;
  void backward(const nn::BasicTensor<T>& grad_prediction, const nn::BasicTensor<T>& grad_scale) override;
  std::vector<nn::Param<T>> params() override;
  std::vector<nn::Buffer<T>> buffers() override;
  std::vector<nn::LayerSpec> layer_specs() const override;

  const PatchRegressorConfig& config() const noexcept { return config_; }

 private:
  void check_input(const nn::BasicTensor<T>& x) const;

  PatchRegressorConfig config_;
  Sequential<T> layers_;
};

extern template class PatchRegressor<float>;
extern template class PatchRegressor<double>;

}  // namespace deepscan::models
