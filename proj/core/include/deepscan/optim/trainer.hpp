#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "deepscan/data/dataset.hpp"
#include "deepscan/models/network.hpp"
#include "deepscan/optim/adam.hpp"

namespace deepscan::optim {

enum class LossKind { mse, laplace };

std::string_view to_string(LossKind kind);
std::optional<LossKind> parse_loss_kind(std::string_view text);

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t steps_per_epoch = 1;
  std::size_t batch_size = 16;
  std::uint64_t seed = 42;
  LossKind loss = LossKind::mse;
  AdamHyper adam;

  void validate() const;
};

/// Called after every step with the 0-based global step and its loss.
using StepCallback = std::function<void(std::size_t step, double loss)>;

/// Runs epochs x steps_per_epoch Adam steps. Each epoch walks a fresh
/// shuffle of the set (seeded by config.seed and the epoch); an epoch with
/// more steps than batches continues into a further shuffle. Returns one
/// training-batch loss per step. Throws NonFiniteError naming the step if a
/// loss is NaN or infinite; parameters are not updated on that step.
std::vector<double> train(models::Network<float>& net, const data::TrainingSet& set, const TrainConfig& config,
                          const StepCallback& on_step = {});

/// `step,loss` header followed by one 1-based row per step.
void write_loss_csv(const std::vector<double>& trace, const std::filesystem::path& path);

}  // namespace deepscan::optim
