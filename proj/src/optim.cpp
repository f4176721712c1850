#include "polarscan/optim.hpp"

#include <cmath>

#include "polarscan/errors.hpp"

namespace polarscan {

template <typename T>
AdamState<T> AdamState<T>::init(const std::vector<Parameter<T>>& params,
                                const AdamConfig& cfg) {
  AdamState<T> st;
  st.cfg = cfg;
  st.m.reserve(params.size());
  st.v.reserve(params.size());
  for (const Parameter<T>& p : params) {
    st.m.emplace_back(p.tensor.size(), T{0});
    st.v.emplace_back(p.tensor.size(), T{0});
  }
  return st;
}

template <typename T>
void adam_step(std::vector<Parameter<T>>& params, AdamState<T>& state) {
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: state built for a different parameter set");
  }
  state.step += 1;
  const T b1 = static_cast<T>(state.cfg.beta1);
  const T b2 = static_cast<T>(state.cfg.beta2);
  const T corr1 = static_cast<T>(1.0 - std::pow(state.cfg.beta1, state.step));
  const T corr2 = static_cast<T>(1.0 - std::pow(state.cfg.beta2, state.step));
  const T lr = static_cast<T>(state.cfg.lr);
  const T eps = static_cast<T>(state.cfg.epsilon);

  for (size_t pi = 0; pi < params.size(); ++pi) {
    auto vals = params[pi].tensor.values_mut();
    auto grads = params[pi].tensor.grad();
    if (grads.size() != vals.size() || state.m[pi].size() != vals.size()) {
      throw ShapeError("adam_step: buffer size mismatch for " + params[pi].name);
    }
    T* m = state.m[pi].data();
    T* v = state.v[pi].data();
    for (size_t i = 0; i < vals.size(); ++i) {
      const T g = grads[i];
      m[i] = b1 * m[i] + (T{1} - b1) * g;
      v[i] = b2 * v[i] + (T{1} - b2) * g * g;
      const T mhat = m[i] / corr1;
      const T vhat = v[i] / corr2;
      vals[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

template <typename T>
Tensor<T> gaussian_init(Shape shape, int fan_in, InitMode mode, Rng& rng) {
  if (fan_in < 1) throw ShapeError("gaussian_init: fan_in must be >= 1");
  const double stddev =
      mode == InitMode::kScaled ? std::sqrt(2.0 / static_cast<double>(fan_in)) : 1.0;
  std::vector<T> vals(shape_size(shape));
  for (T& v : vals) v = static_cast<T>(stddev * rng.gaussian());
  return Tensor<T>::param(std::move(shape), std::move(vals));
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step(std::vector<Parameter<float>>&, AdamState<float>&);
template void adam_step(std::vector<Parameter<double>>&, AdamState<double>&);
template Tensor<float> gaussian_init(Shape, int, InitMode, Rng&);
template Tensor<double> gaussian_init(Shape, int, InitMode, Rng&);

}  // namespace polarscan
