#include "voxedit/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace voxedit {

void adam_step(AdamState& state, std::span<float> params, std::span<const float> grads) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: gradient/parameter size mismatch");
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: moment buffers do not match parameter count");
  }
  ++state.step;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = b1 * state.m[i] + (1.0 - b1) * g;
    const double v = b2 * state.v[i] + (1.0 - b2) * g * g;
    state.m[i] = static_cast<float>(m);
    state.v[i] = static_cast<float>(v);
    if (m == 0.0) continue;
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[i] = static_cast<float>(params[i] - state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
  }
}

}  // namespace voxedit
