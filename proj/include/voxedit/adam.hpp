#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace voxedit {

struct AdamState {
  std::int64_t step = 0;
  std::vector<float> m;
  std::vector<float> v;
  double lr = 0.03;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  AdamState() = default;
  explicit AdamState(std::size_t n, double learning_rate = 0.03) : m(n, 0.0f), v(n, 0.0f), lr(learning_rate) {}
};

/// One bias-corrected Adam update of `params` in place.
void adam_step(AdamState& state, std::span<float> params, std::span<const float> grads);

}  // namespace voxedit
