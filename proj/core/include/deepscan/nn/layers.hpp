#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepscan/nn/kernels.hpp"
#include "deepscan/nn/tensor.hpp"

namespace deepscan::nn {

enum class LayerKind { conv2d, batchnorm, dense, relu, maxpool2, upsample2, concat, flatten, residual_add };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view text);

/// Declarative description of one layer. Convolutions are always stride 1
/// with same zero padding.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::string name;
  std::size_t in_channels = 0;   // conv2d/batchnorm channels, dense D_in, concat split point
  std::size_t out_channels = 0;  // conv2d filters, dense D_out
  std::size_t kernel = 0;        // conv2d square kernel extent
  double eps = 1e-3;             // batchnorm

  /// Throws RangeError when a kind-specific hyperparameter is invalid.
  void validate() const;
};

/// A named trainable tensor together with its gradient accumulator.
template <typename T>
struct Param {
  std::string name;
  BasicTensor<T>* value;
  BasicTensor<T>* grad;
};

/// A named non-trainable tensor (batch-norm running moments). `present`,
/// when set, flags whether the value holds data yet; whoever fills the
/// tensor from outside sets it.
template <typename T>
struct Buffer {
  std::string name;
  BasicTensor<T>* value;
  bool* present = nullptr;

  bool has_value() const noexcept { return present == nullptr || *present; }
};

/// Single-input layer with cached forward state for one backward pass.
///
/// forward(x, train) may cache; infer(x) never mutates and is safe to call
/// concurrently.
template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;

  virtual const LayerSpec& spec() const = 0;
  virtual BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) = 0;
  virtual BasicTensor<T> infer(const BasicTensor<T>& x) const = 0;
  /// Accumulates parameter gradients and returns the input gradient.
  virtual BasicTensor<T> backward(const BasicTensor<T>& grad_output) = 0;

  virtual std::vector<Param<T>> params() { return {}; }
  virtual std::vector<Buffer<T>> buffers() { return {}; }

  /// Skips the input gradient when only parameter gradients are needed.
  void set_input_grad(bool needed) { input_grad_ = needed; }

 protected:
  bool input_grad_ = true;
};

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  explicit Conv2d(LayerSpec spec);
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> infer(const BasicTensor<T>& x) const override;
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;
  std::vector<Param<T>> params() override;

  BasicTensor<T> kernel, bias, kernel_grad, bias_grad;

 private:
  LayerSpec spec_;
  BasicTensor<T> input_;
};

template <typename T>
class BatchNorm final : public Layer<T> {
 public:
  explicit BatchNorm(LayerSpec spec);
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> infer(const BasicTensor<T>& x) const override;
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;
  std::vector<Param<T>> params() override;
  std::vector<Buffer<T>> buffers() override;

  BasicTensor<T> gamma, beta, gamma_grad, beta_grad;
  BatchNormState<T> state;

 private:
  LayerSpec spec_;
  BatchNormCache<T> cache_;
};

template <typename T>
class Dense final : public Layer<T> {
 public:
  explicit Dense(LayerSpec spec);
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> infer(const BasicTensor<T>& x) const override;
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;
  std::vector<Param<T>> params() override;

  BasicTensor<T> weight, bias, weight_grad, bias_grad;

 private:
  LayerSpec spec_;
  BasicTensor<T> input_;
};

template <typename T>
class Relu final : public Layer<T> {
 public:
  explicit Relu(LayerSpec spec) : spec_(std::move(spec)) {}
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> infer(const BasicTensor<T>& x) const override { return relu_forward(x); }
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;

 private:
  LayerSpec spec_;
  BasicTensor<T> input_;
};

template <typename T>
class MaxPool2 final : public Layer<T> {
 public:
  explicit MaxPool2(LayerSpec spec) : spec_(std::move(spec)) {}
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> infer(const BasicTensor<T>& x) const override { return maxpool2_forward(x).output; }
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;

 private:
  LayerSpec spec_;
  Shape input_shape_;
  std::vector<std::uint32_t> argmax_;
};

template <typename T>
class Upsample2 final : public Layer<T> {
 public:
  explicit Upsample2(LayerSpec spec) : spec_(std::move(spec)) {}
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override { return upsample2_forward(x); }
  BasicTensor<T> infer(const BasicTensor<T>& x) const override { return upsample2_forward(x); }
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override {
    return upsample2_backward(grad_output);
  }

 private:
  LayerSpec spec_;
};

/// [N, C, H, W] -> [N, C*H*W].
template <typename T>
class Flatten final : public Layer<T> {
 public:
  explicit Flatten(LayerSpec spec) : spec_(std::move(spec)) {}
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode mode) override;
  BasicTensor<T> infer(const BasicTensor<T>& x) const override;
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;

 private:
  LayerSpec spec_;
  Shape input_shape_;
};

/// Single-input view of the two-input concat: splits the input's channels at
/// spec.in_channels and concatenates the halves back. Exists so the concat
/// kernel pair can be exercised through the generic layer machinery.
template <typename T>
class ConcatSplit final : public Layer<T> {
 public:
  explicit ConcatSplit(LayerSpec spec) : spec_(std::move(spec)) {}
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override { return infer(x); }
  BasicTensor<T> infer(const BasicTensor<T>& x) const override;
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;

 private:
  LayerSpec spec_;
};

/// Single-input view of residual-add: splits the channels in half and adds.
template <typename T>
class ResidualAddSplit final : public Layer<T> {
 public:
  explicit ResidualAddSplit(LayerSpec spec) : spec_(std::move(spec)) {}
  const LayerSpec& spec() const override { return spec_; }
  BasicTensor<T> forward(const BasicTensor<T>& x, Mode) override { return infer(x); }
  BasicTensor<T> infer(const BasicTensor<T>& x) const override;
  BasicTensor<T> backward(const BasicTensor<T>& grad_output) override;

 private:
  LayerSpec spec_;
};

/// He-normal initialization for weights, zeros for biases, unit gamma.
template <typename T>
void initialize(Layer<T>& layer, std::uint64_t seed);

/// Builds the layer described by `spec` with parameters drawn from `seed`.
template <typename T>
std::unique_ptr<Layer<T>> make_layer(const LayerSpec& spec, std::uint64_t seed);

/// Parameter element count of one spec (running moments excluded).
std::size_t param_count(const LayerSpec& spec);

}  // namespace deepscan::nn
