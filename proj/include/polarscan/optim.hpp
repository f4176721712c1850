#pragma once

#include <string>
#include <vector>

#include "polarscan/rng.hpp"
#include "polarscan/tensor.hpp"

namespace polarscan {

template <typename T>
struct Parameter {
  std::string name;  // stable hierarchical name, e.g. "group3.block.conv2.weight"
  Tensor<T> tensor;
};

// Adam with bias correction; beta/epsilon are the customary defaults.
struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
  AdamConfig cfg;
  int64_t step = 0;
  std::vector<std::vector<T>> m;  // first moments, one buffer per parameter
  std::vector<std::vector<T>> v;  // second moments

  static AdamState init(const std::vector<Parameter<T>>& params, const AdamConfig& cfg);
};

// One Adam update from the gradients currently held by the parameters.
// Deterministic given (params, grads, state).
template <typename T>
void adam_step(std::vector<Parameter<T>>& params, AdamState<T>& state);

enum class InitMode {
  kScaled,    // N(0, 2/fan_in); the trainable default
  kFaithful,  // N(0, 1)
};

// Seeded Gaussian weight init. fan_in must be >= 1.
template <typename T>
Tensor<T> gaussian_init(Shape shape, int fan_in, InitMode mode, Rng& rng);

}  // namespace polarscan
