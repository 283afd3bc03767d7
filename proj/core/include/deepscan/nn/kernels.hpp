#pragma once

// Forward and backward kernels for every layer kind the two restoration
// networks use. All functions are pure: outputs depend only on arguments.
//
// Spatial tensors are [N, C, H, W]; the single-image form [C, H, W] is also
// accepted wherever noted and is treated as N = 1.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "deepscan/nn/tensor.hpp"

namespace deepscan::nn {

enum class Mode { train, eval };

/// Leading zero-padding of a "same" convolution with kernel extent k. The
/// window around output pixel p covers p - pad_before(k) ... p + k/2, so
/// even kernels reach one pixel further forward than backward (k=4: -1..+2).
constexpr std::size_t same_pad_before(std::size_t k) noexcept { return (k - 1) / 2; }

// ---- conv2d: stride 1, same zero padding ----

template <typename T>
struct Conv2dGrads {
  BasicTensor<T> input;   // empty when not requested
  BasicTensor<T> kernel;  // [C_out, C_in, kh, kw]
  BasicTensor<T> bias;    // [C_out]
};

/// input [N,C_in,H,W] or [C_in,H,W]; kernel [C_out,C_in,kh,kw]; bias [C_out].
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                              const BasicTensor<T>& bias);

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                               const BasicTensor<T>& grad_output, bool need_input_grad = true);

// ---- batch normalization over all axes except 1 ----

template <typename T>
struct BatchNormState {
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;
  bool initialized = false;
  double momentum = 0.9;  // running = momentum * running + (1 - momentum) * batch
};

/// Values kept from a forward pass for the backward pass.
template <typename T>
struct BatchNormCache {
  BasicTensor<T> normalized;
  std::vector<T> inv_std;
  Mode mode = Mode::train;
};

template <typename T>
struct BatchNormGrads {
  BasicTensor<T> input;
  BasicTensor<T> gamma;
  BasicTensor<T> beta;
};

/// batch [N,C,...]. Train mode normalizes with biased batch moments and folds
/// them into `state` (the first call seeds the running moments directly).
/// Eval mode uses the running moments and throws StateError if none exist.
template <typename T>
BasicTensor<T> batchnorm_forward(const BasicTensor<T>& batch, const BasicTensor<T>& gamma,
                                 const BasicTensor<T>& beta, double eps, Mode mode,
                                 BatchNormState<T>& state, BatchNormCache<T>* cache = nullptr);

/// Eval-mode forward that never touches the state.
template <typename T>
BasicTensor<T> batchnorm_infer(const BasicTensor<T>& batch, const BasicTensor<T>& gamma,
                               const BasicTensor<T>& beta, double eps,
                               const BatchNormState<T>& state);

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BasicTensor<T>& grad_output,
                                     const BasicTensor<T>& gamma, const BatchNormCache<T>& cache);

// ---- dense: y = x W + b ----

template <typename T>
struct DenseGrads {
  BasicTensor<T> input;
  BasicTensor<T> weight;
  BasicTensor<T> bias;
};

/// x [N,D_in], weight [D_in,D_out], bias [D_out]. Each output row depends only
/// on its own input row: the result for a sample is bit-identical whatever
/// batch it is evaluated in.
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                             const BasicTensor<T>& bias);

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& x, const BasicTensor<T>& weight,
                             const BasicTensor<T>& grad_output, bool need_input_grad = true);

// ---- parameter-free ops ----

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x);

/// Passes gradient where x > 0; zero at and below 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_output);

template <typename T>
struct MaxPoolResult {
  BasicTensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

/// 2x2 non-overlapping max pool; H and W must be even. Ties resolve to the
/// first element in row-major order.
template <typename T>
MaxPoolResult<T> maxpool2_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> maxpool2_backward(const BasicTensor<T>& grad_output,
                                 const std::vector<std::uint32_t>& argmax, const Shape& input_shape);

/// Nearest-neighbour 2x upsampling.
template <typename T>
BasicTensor<T> upsample2_forward(const BasicTensor<T>& x);

template <typename T>
BasicTensor<T> upsample2_backward(const BasicTensor<T>& grad_output);

/// Channel concatenation: a's channels first.
template <typename T>
BasicTensor<T> concat_channels(const BasicTensor<T>& a, const BasicTensor<T>& b);

/// Inverse of concat_channels: splits at channel `first_channels`.
template <typename T>
std::pair<BasicTensor<T>, BasicTensor<T>> split_channels(const BasicTensor<T>& x,
                                                         std::size_t first_channels);

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b);

}  // namespace deepscan::nn
