#pragma once

#include "ddrecon/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ddrecon {

struct AdamState {
  std::uint64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double learning_rate = 1e-3;
};

/// One bias-corrected Adam update of every tensor in `params`, in order.
/// Moments are allocated on the first step. Throws missing_gradient if any
/// parameter has no gradient buffer.
void adam_step(std::span<Tensor> params, AdamState& state);

void zero_grads(std::span<Tensor> params);

} // namespace ddrecon
