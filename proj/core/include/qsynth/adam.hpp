#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace qsynth {

// Adam with bias correction. Shared by angle refinement and the policy
// updates; one instance per parameter vector.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double lr = 1e-3;

  AdamState(std::size_t count, double learning_rate)
      : m(count, 0.0), v(count, 0.0), lr(learning_rate) {}
};

// In-place update. Throws std::runtime_error on non-finite gradients.
void adam_step(AdamState& state, std::span<double> params,
               std::span<const double> grads);

}  // namespace qsynth
