#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace polarscan {

using Shape = std::vector<int>;

size_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

namespace detail {

template <typename T>
struct TensorNode {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;  // allocated (zeroed) iff requires_grad
  bool requires_grad = false;
  uint64_t id = 0;
  std::vector<std::shared_ptr<TensorNode>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(TensorNode&)> backward_fn;
};

}  // namespace detail

// Reverse-mode differentiable n-d array. A Tensor is a cheap handle onto a
// graph node; ops build the graph, backward() walks it in reverse
// topological order. Gradients accumulate until zero_grad(), so calling
// backward twice on one graph doubles leaf gradients.
template <typename T>
class Tensor {
 public:
  using Scalar = T;

  Tensor() = default;

  // Leaf constructors.
  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor constant(Shape shape, std::vector<T> values);
  static Tensor param(Shape shape, std::vector<T> values);  // requires_grad

  bool defined() const { return static_cast<bool>(n_); }
  const Shape& shape() const { return n_->shape; }
  size_t size() const { return n_->value.size(); }
  int dim(int i) const { return n_->shape[static_cast<size_t>(i)]; }
  uint64_t node_id() const { return n_->id; }
  bool requires_grad() const { return n_->requires_grad; }

  std::span<const T> values() const { return n_->value; }
  std::span<T> values_mut() { return n_->value; }
  std::span<const T> grad() const { return n_->grad; }
  std::span<T> grad_mut() { return n_->grad; }
  T item() const;  // scalar tensors only

  void zero_grad();

  // Seeds d(this)/d(this) = 1 and accumulates gradients into every
  // reachable node that requires them. Scalar tensors only.
  void backward() const;
  // Same, with an explicit seed (used for batch-mean scaling).
  void backward(T seed) const;

  detail::TensorNode<T>* node() const { return n_.get(); }

  // Graph-building helper shared by the op implementations.
  static Tensor make_op(Shape shape, bool requires_grad,
                        std::vector<std::shared_ptr<detail::TensorNode<T>>> inputs,
                        std::function<void(detail::TensorNode<T>&)> backward_fn);

  std::shared_ptr<detail::TensorNode<T>> handle() const { return n_; }

 private:
  explicit Tensor(std::shared_ptr<detail::TensorNode<T>> n) : n_(std::move(n)) {}
  std::shared_ptr<detail::TensorNode<T>> n_;
};

// Elementwise and structural ops. All are differentiable w.r.t. every
// Tensor argument that requires grad.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T c);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> sum(const Tensor<T>& a);
template <typename T> Tensor<T> concat_channels(std::span<const Tensor<T>> parts);
template <typename T> Tensor<T> maxpool2x2(const Tensor<T>& a);
template <typename T> Tensor<T> flatten(const Tensor<T>& a);

// y = W x + b with W [out, in], x [in], b [out].
template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);

// 3x3 stride-1 cross-correlation with zero "same" padding.
// input [C_in, H, W], weight [C_out, C_in, 3, 3], bias [C_out].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

// Mean of squared differences; the target is treated as a constant.
template <typename T>
Tensor<T> mse_scalar(const Tensor<T>& pred, const Tensor<T>& target);

}  // namespace polarscan
