#pragma once

#include <memory>
#include <vector>

#include "deepscan/nn/layers.hpp"

namespace deepscan::models {

/// Layers applied in order. Owns its layers.
template <typename T>
class Sequential {
 public:
  void add(const nn::LayerSpec& spec, std::uint64_t seed) { layers_.push_back(nn::make_layer<T>(spec, seed)); }

  nn::BasicTensor<T> forward(nn::BasicTensor<T> x, nn::Mode mode) {
    for (auto& l : layers_) x = l->forward(x, mode);
    return x;
  }
  nn::BasicTensor<T> infer(nn::BasicTensor<T> x) const {
    for (const auto& l : layers_) x = l->infer(x);
    return x;
  }
  nn::BasicTensor<T> backward(nn::BasicTensor<T> g) {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  void append_params(std::vector<nn::Param<T>>& out) {
    for (auto& l : layers_) {
      auto p = l->params();
      out.insert(out.end(), p.begin(), p.end());
    }
  }
  void append_buffers(std::vector<nn::Buffer<T>>& out) {
    for (auto& l : layers_) {
      auto b = l->buffers();
      out.insert(out.end(), b.begin(), b.end());
    }
  }
  void append_specs(std::vector<nn::LayerSpec>& out) const {
    for (const auto& l : layers_) out.push_back(l->spec());
  }

  nn::Layer<T>& front() { return *layers_.front(); }
  nn::Layer<T>& layer(std::size_t i) { return *layers_.at(i); }
  std::size_t size() const noexcept { return layers_.size(); }

 private:
  std::vector<std::unique_ptr<nn::Layer<T>>> layers_;
};

}  // namespace deepscan::models
