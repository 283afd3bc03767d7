#include "deepscan/optim/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "deepscan/data/split.hpp"
#include "deepscan/io/bytes.hpp"
#include "deepscan/optim/losses.hpp"
#include "deepscan/util/error.hpp"
#include "deepscan/util/random.hpp"

namespace deepscan::optim {

std::string_view to_string(LossKind kind) { return kind == LossKind::mse ? "mse" : "laplace"; }

std::optional<LossKind> parse_loss_kind(std::string_view text) {
  if (text == "mse") return LossKind::mse;
  if (text == "laplace") return LossKind::laplace;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (epochs == 0 || steps_per_epoch == 0 || batch_size == 0) {
    throw RangeError("train: epochs, steps per epoch and batch size must all be at least 1");
  }
  adam.validate();
}

std::vector<double> train(models::Network<float>& net, const data::TrainingSet& set, const TrainConfig& config,
                          const StepCallback& on_step) {
  config.validate();
  if (set.size() == 0) throw RangeError("train: empty dataset");

  AdamState<float> state;
  std::vector<double> trace;
  trace.reserve(config.epochs * config.steps_per_epoch);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::vector<std::size_t>> order;
    for (std::size_t s = 0; s < config.steps_per_epoch; ++s) {
      const std::size_t pass = order.empty() ? 0 : s / order.size();
      if (order.empty() || s % order.size() == 0) {
        order = data::batches(set.size(), config.batch_size, stream_key(config.seed, pass), epoch);
      }
      const std::size_t step = trace.size();
      const data::Batch batch = set.batch(order[s % order.size()]);

      net.zero_grad();
      const auto out = net.forward(batch.inputs, nn::Mode::train);
      double loss = 0.0;
      if (config.loss == LossKind::mse) {
        auto l = mse_loss(out.prediction, batch.targets);
        loss = l.value;
        if (!std::isfinite(loss)) throw NonFiniteError("training loss is not finite at step " + std::to_string(step + 1));
        net.backward(l.grad, {});
      } else {
        if (out.scale.empty()) throw StateError("train: laplace loss needs a network with a scale head");
        auto l = laplace_nll(out.prediction, out.scale, batch.targets);
        loss = l.value;
        if (!std::isfinite(loss)) throw NonFiniteError("training loss is not finite at step " + std::to_string(step + 1));
        net.backward(l.grad_location, l.grad_scale);
      }
      const auto params = net.params();
      adam_step<float>(params, state, config.adam);
      trace.push_back(loss);
      if (on_step) on_step(step, loss);
    }
  }
  return trace;
}

void write_loss_csv(const std::vector<double>& trace, const std::filesystem::path& path) {
  std::string text = "step,loss\n";
  char line[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,%.9g\n", i + 1, trace[i]);
    text += line;
  }
  io::write_text_file(path, text);
}

}  // namespace deepscan::optim
