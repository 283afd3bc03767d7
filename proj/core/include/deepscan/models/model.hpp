#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deepscan/data/normalize.hpp"
#include "deepscan/models/patch_regressor.hpp"
#include "deepscan/models/residual_unet.hpp"

namespace deepscan::models {

enum class Arch : std::uint8_t { patches = 1, unet = 2 };

std::string_view to_string(Arch arch);
std::optional<Arch> parse_arch(std::string_view text);

using Hyper = std::map<std::string, std::string>;

/// A float network together with the architecture hyperparameters that
/// rebuild it and the intensity normalization it was trained under.
///
/// Inputs are mapped through `input_norm` before the network; predictions
/// are mapped back through `output_norm` (patches) or, for the residual
/// U-Net, added to the raw input as (hi - lo) * mu. A model without
/// normalization runs on raw intensities.
class Model {
 public:
  Model(PatchRegressorConfig config);
  Model(ResidualUNetConfig config);

  /// Rebuilds an untrained network from serialized hyperparameters.
  static Model from_hyper(Arch arch, const Hyper& hyper);

  Arch arch() const noexcept { return arch_; }
  std::size_t in_channels() const noexcept;
  Hyper hyper() const;

  Network<float>& net() noexcept { return *net_; }
  const Network<float>& net() const noexcept { return *net_; }
  PatchRegressor<float>* patches() noexcept;
  const PatchRegressor<float>* patches() const noexcept;
  ResidualUNet<float>* unet() noexcept;
  const ResidualUNet<float>* unet() const noexcept;

  std::optional<data::NormalizationParams> input_norm;
  std::optional<data::NormalizationParams> output_norm;

 private:
  Arch arch_;
  std::unique_ptr<Network<float>> net_;
};

/// The default patch regressor for 1 or 2 channels.
Model build_patch_regressor(std::size_t in_channels, bool relu_head = false, std::uint64_t seed = 42);
/// The default depth-2, kernel-5 residual U-Net.
Model build_residual_unet(std::size_t in_channels, std::size_t base_filters = 32, std::uint64_t seed = 42);

/// Element count of every trainable tensor (running moments excluded).
std::size_t count_params(Model& model);
std::size_t count_params(const std::vector<nn::LayerSpec>& specs);

}  // namespace deepscan::models
