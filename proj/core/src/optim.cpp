#include "ddrecon/optim.hpp"

#include "ddrecon/error.hpp"

#include <cmath>

namespace ddrecon {

void adam_step(std::span<Tensor> params, AdamState& state) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].has_grad()) {
      throw Error(ErrorCode::missing_gradient, "adam_step: parameter " + std::to_string(i) + " of shape " +
                                                   shape_string(params[i].shape()) + " has no gradient");
    }
  }
  if (state.m.empty()) {
    for (const auto& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw Error(ErrorCode::shape_mismatch, "adam_step: state tracks " + std::to_string(state.m.size()) +
                                               " parameters, got " + std::to_string(params.size()));
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i].mutable_data();
    auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != w.size()) {
      throw Error(ErrorCode::shape_mismatch, "adam_step: moment size mismatch for parameter " + std::to_string(i));
    }
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

void zero_grads(std::span<Tensor> params) {
  for (auto& p : params) {
    p.zero_grad();
  }
}

} // namespace ddrecon
