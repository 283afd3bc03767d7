#pragma once

#include <cstdint>
#include <vector>

#include "deepscan/models/network.hpp"
#include "deepscan/models/sequential.hpp"

namespace deepscan::models {

struct ResidualUNetConfig {
  std::size_t in_channels = 2;
  std::size_t base_filters = 32;
  std::size_t depth = 2;
  std::size_t kernel = 5;
  /// Zero the mu head so the untrained network is the identity.
  bool zero_mu_head = true;
  std::uint64_t seed = 42;

  void validate() const;
  /// Depth-2 network with two base filters and 3x3 kernels and a random mu
  /// head, for whole-model gradient checks.
  static ResidualUNetConfig tiny(std::size_t in_channels, std::uint64_t seed);
};

/// Encoder levels of two conv+relu at base*2^level filters followed by a
/// 2x2 max pool, a bottleneck of two conv+relu, decoder levels of upsample,
/// skip concatenation and two conv+relu, then linear 1x1 heads mu and s.
/// prediction = input + mu; scale = s (raw, before softplus).
/// Input [N, C, H, W] with H and W divisible by 2^depth.
template <typename T>
class ResidualUNet final : public Network<T> {
 public:
  explicit ResidualUNet(ResidualUNetConfig config);

  NetOutput<T> forward(const nn::BasicTensor<T>& x, nn::Mode mode) override;
  NetOutput<T> infer(const nn::BasicTensor<T>& x) const override;
  void backward(const nn::BasicTensor<T>& grad_prediction, const nn::BasicTensor<T>& grad_scale) override;
  std::vector<nn::Param<T>> params() override;
  std::vector<nn::Buffer<T>> buffers() override;
  std::vector<nn::LayerSpec> layer_specs() const override;

  /// The mu map alone, without the residual input.
  nn::BasicTensor<T> infer_correction(const nn::BasicTensor<T>& x, nn::BasicTensor<T>* scale = nullptr) const;

  const ResidualUNetConfig& config() const noexcept { return config_; }
  nn::Conv2d<T>& mu_head() noexcept { return *mu_head_; }
  nn::Conv2d<T>& s_head() noexcept { return *s_head_; }

 private:
  void check_input(const nn::BasicTensor<T>& x) const;

  ResidualUNetConfig config_;
  std::vector<Sequential<T>> encoder_;
  Sequential<T> bottleneck_;
  std::vector<Sequential<T>> decoder_;  // decoder_[level], run from the deepest level up
  std::unique_ptr<nn::Conv2d<T>> mu_head_;
  std::unique_ptr<nn::Conv2d<T>> s_head_;

  // Train-mode caches.
  std::vector<nn::BasicTensor<T>> skips_;
  std::vector<std::vector<std::uint32_t>> pool_argmax_;
};

extern template class ResidualUNet<float>;
extern template class ResidualUNet<double>;

}  // namespace deepscan::models
