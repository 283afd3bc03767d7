#pragma once

#include "deepscan/models/network.hpp"
#include "deepscan/nn/grad_check.hpp"

namespace deepscan::models {

/// Finite-difference check of every parameter gradient of a whole network
/// under the scalar loss sum(w * prediction) + sum(v * scale), with fixed
/// weights w, v in [0.5, 1.5]. Eval mode needs seeded batch-norm moments.
nn::GradCheckReport grad_check_network(Network<double>& net, const nn::TensorD& input,
                                       const nn::GradCheckOptions& options = {},
                                       nn::Mode mode = nn::Mode::train);

/// Draws every bias and batch-norm shift from U(-0.5, 0.5). With the
/// default zero biases a dead region feeds exactly 0 into the next ReLU,
/// which sits on the kink where finite differences see slope 1/2.
void randomize_biases(Network<double>& net, std::uint64_t seed);

}  // namespace deepscan::models
