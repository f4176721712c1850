#include "polarscan/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <unordered_set>

#include "polarscan/errors.hpp"

namespace polarscan {

size_t shape_size(const Shape& s) {
  size_t n = 1;
  for (int d : s) n *= static_cast<size_t>(d);
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

namespace {

std::atomic<uint64_t> g_next_node_id{1};

template <typename T>
std::shared_ptr<detail::TensorNode<T>> new_node(Shape shape, bool requires_grad) {
  auto n = std::make_shared<detail::TensorNode<T>>();
  n->shape = std::move(shape);
  n->value.resize(shape_size(n->shape));
  n->requires_grad = requires_grad;
  if (requires_grad) n->grad.assign(n->value.size(), T{0});
  n->id = g_next_node_id.fetch_add(1, std::memory_order_relaxed);
  return n;
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                     " vs " + shape_str(b.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return Tensor(new_node<T>(std::move(shape), requires_grad));
}

template <typename T>
Tensor<T> Tensor<T>::constant(Shape shape, std::vector<T> values) {
  auto n = new_node<T>(std::move(shape), false);
  if (values.size() != n->value.size()) {
    throw ShapeError("constant: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(n->shape));
  }
  n->value = std::move(values);
  return Tensor(std::move(n));
}

template <typename T>
Tensor<T> Tensor<T>::param(Shape shape, std::vector<T> values) {
  auto n = new_node<T>(std::move(shape), true);
  if (values.size() != n->value.size()) {
    throw ShapeError("param: " + std::to_string(values.size()) + " values for shape " +
                     shape_str(n->shape));
  }
  n->value = std::move(values);
  return Tensor(std::move(n));
}

template <typename T>
T Tensor<T>::item() const {
  if (size() != 1) throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  return n_->value[0];
}

template <typename T>
void Tensor<T>::zero_grad() {
  std::fill(n_->grad.begin(), n_->grad.end(), T{0});
}

template <typename T>
Tensor<T> Tensor<T>::make_op(Shape shape, bool requires_grad,
                             std::vector<std::shared_ptr<detail::TensorNode<T>>> inputs,
                             std::function<void(detail::TensorNode<T>&)> backward_fn) {
  auto n = new_node<T>(std::move(shape), requires_grad);
  n->inputs = std::move(inputs);
  if (requires_grad) n->backward_fn = std::move(backward_fn);
  return Tensor(std::move(n));
}

template <typename T>
void Tensor<T>::backward(T seed) const {
  if (size() != 1) throw ShapeError("backward() needs a scalar loss");
  if (!n_->requires_grad) return;  // loss independent of every parameter
  using Node = detail::TensorNode<T>;

  // Iterative post-order DFS; creation ids are strictly increasing along
  // graph edges, so reversing the post-order gives a valid reverse
  // topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(n_.get(), 0);
  visited.insert(n_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  n_->grad[0] += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if ((*it)->backward_fn) (*it)->backward_fn(**it);
  }
}

template <typename T>
void Tensor<T>::backward() const {
  backward(T{1});
}

// ---------------------------------------------------------------------------
// Elementwise / structural ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "add");
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = Tensor<T>::make_op(a.shape(), rg, {a.handle(), b.handle()},
                                     [](detail::TensorNode<T>& n) {
                                       for (int k = 0; k < 2; ++k) {
                                         auto& in = *n.inputs[k];
                                         if (!in.requires_grad) continue;
                                         for (size_t i = 0; i < n.grad.size(); ++i)
                                           in.grad[i] += n.grad[i];
                                       }
                                     });
  auto va = a.values();
  auto vb = b.values();
  auto vo = out.values_mut();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] + vb[i];
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "sub");
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = Tensor<T>::make_op(a.shape(), rg, {a.handle(), b.handle()},
                                     [](detail::TensorNode<T>& n) {
                                       auto& ia = *n.inputs[0];
                                       auto& ib = *n.inputs[1];
                                       if (ia.requires_grad)
                                         for (size_t i = 0; i < n.grad.size(); ++i)
                                           ia.grad[i] += n.grad[i];
                                       if (ib.requires_grad)
                                         for (size_t i = 0; i < n.grad.size(); ++i)
                                           ib.grad[i] -= n.grad[i];
                                     });
  auto va = a.values();
  auto vb = b.values();
  auto vo = out.values_mut();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] - vb[i];
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  check_same_shape(a, b, "mul");
  const bool rg = a.requires_grad() || b.requires_grad();
  Tensor<T> out = Tensor<T>::make_op(a.shape(), rg, {a.handle(), b.handle()},
                                     [](detail::TensorNode<T>& n) {
                                       auto& ia = *n.inputs[0];
                                       auto& ib = *n.inputs[1];
                                       if (ia.requires_grad)
                                         for (size_t i = 0; i < n.grad.size(); ++i)
                                           ia.grad[i] += n.grad[i] * ib.value[i];
                                       if (ib.requires_grad)
                                         for (size_t i = 0; i < n.grad.size(); ++i)
                                           ib.grad[i] += n.grad[i] * ia.value[i];
                                     });
  auto va = a.values();
  auto vb = b.values();
  auto vo = out.values_mut();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] * vb[i];
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  Tensor<T> out = Tensor<T>::make_op(a.shape(), a.requires_grad(), {a.handle()},
                                     [c](detail::TensorNode<T>& n) {
                                       auto& in = *n.inputs[0];
                                       for (size_t i = 0; i < n.grad.size(); ++i)
                                         in.grad[i] += c * n.grad[i];
                                     });
  auto va = a.values();
  auto vo = out.values_mut();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = c * va[i];
  return out;
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::make_op(a.shape(), a.requires_grad(), {a.handle()},
                                     [](detail::TensorNode<T>& n) {
                                       auto& in = *n.inputs[0];
                                       // subgradient 0 at the kink
                                       for (size_t i = 0; i < n.grad.size(); ++i)
                                         if (in.value[i] > T{0}) in.grad[i] += n.grad[i];
                                     });
  auto va = a.values();
  auto vo = out.values_mut();
  for (size_t i = 0; i < vo.size(); ++i) vo[i] = va[i] > T{0} ? va[i] : T{0};
  return out;
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::make_op({1}, a.requires_grad(), {a.handle()},
                                     [](detail::TensorNode<T>& n) {
                                       auto& in = *n.inputs[0];
                                       for (size_t i = 0; i < in.grad.size(); ++i)
                                         in.grad[i] += n.grad[0];
                                     });
  T acc{0};
  for (T v : a.values()) acc += v;
  out.values_mut()[0] = acc;
  return out;
}

template <typename T>
Tensor<T> concat_channels(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: empty input list");
  for (const Tensor<T>& p : parts) {
    if (p.shape().size() != 3) throw ShapeError("concat_channels expects [C,H,W] inputs");
  }
  const int h = parts[0].dim(1);
  const int w = parts[0].dim(2);
  int channels = 0;
  bool rg = false;
  std::vector<std::shared_ptr<detail::TensorNode<T>>> inputs;
  for (const Tensor<T>& p : parts) {
    if (p.dim(1) != h || p.dim(2) != w) {
      throw ShapeError("concat_channels: spatial dims disagree");
    }
    channels += p.dim(0);
    rg = rg || p.requires_grad();
    inputs.push_back(p.handle());
  }

  Tensor<T> out = Tensor<T>::make_op(
      {channels, h, w}, rg, std::move(inputs), [](detail::TensorNode<T>& n) {
        size_t off = 0;
        for (auto& inp : n.inputs) {
          const size_t len = inp->value.size();
          if (inp->requires_grad) {
            for (size_t i = 0; i < len; ++i) inp->grad[i] += n.grad[off + i];
          }
          off += len;
        }
      });
  auto vo = out.values_mut();
  size_t off = 0;
  for (const Tensor<T>& p : parts) {
    auto vp = p.values();
    std::copy(vp.begin(), vp.end(), vo.begin() + off);
    off += vp.size();
  }
  return out;
}

template <typename T>
Tensor<T> maxpool2x2(const Tensor<T>& a) {
  if (a.shape().size() != 3 || a.dim(1) % 2 != 0 || a.dim(2) % 2 != 0) {
    throw ShapeError("maxpool2x2 expects [C,H,W] with even H, W; got " +
                     shape_str(a.shape()));
  }
  const int c = a.dim(0), h = a.dim(1), w = a.dim(2);
  const int oh = h / 2, ow = w / 2;

  // argmax indices for routing gradients; first max wins on ties
  auto winners = std::make_shared<std::vector<uint32_t>>(static_cast<size_t>(c) * oh * ow);
  Tensor<T> out = Tensor<T>::make_op(
      {c, oh, ow}, a.requires_grad(), {a.handle()},
      [winners](detail::TensorNode<T>& n) {
        auto& in = *n.inputs[0];
        for (size_t i = 0; i < n.grad.size(); ++i) in.grad[(*winners)[i]] += n.grad[i];
      });

  auto va = a.values();
  auto vo = out.values_mut();
  for (int ch = 0; ch < c; ++ch) {
    const size_t ib = static_cast<size_t>(ch) * h * w;
    const size_t ob = static_cast<size_t>(ch) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const size_t i00 = ib + static_cast<size_t>(2 * y) * w + 2 * x;
        size_t best = i00;
        if (va[i00 + 1] > va[best]) best = i00 + 1;
        if (va[i00 + w] > va[best]) best = i00 + w;
        if (va[i00 + w + 1] > va[best]) best = i00 + w + 1;
        const size_t o = ob + static_cast<size_t>(y) * ow + x;
        vo[o] = va[best];
        (*winners)[o] = static_cast<uint32_t>(best);
      }
    }
  }
  return out;
}

template <typename T>
Tensor<T> flatten(const Tensor<T>& a) {
  Tensor<T> out = Tensor<T>::make_op(
      {static_cast<int>(a.size())}, a.requires_grad(), {a.handle()},
      [](detail::TensorNode<T>& n) {
        auto& in = *n.inputs[0];
        for (size_t i = 0; i < n.grad.size(); ++i) in.grad[i] += n.grad[i];
      });
  auto va = a.values();
  std::copy(va.begin(), va.end(), out.values_mut().begin());
  return out;
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (x.shape().size() != 1 || weight.shape().size() != 2 || bias.shape().size() != 1 ||
      weight.dim(1) != x.dim(0) || weight.dim(0) != bias.dim(0)) {
    throw ShapeError("linear: incompatible shapes x" + shape_str(x.shape()) + " w" +
                     shape_str(weight.shape()) + " b" + shape_str(bias.shape()));
  }
  const int out_n = weight.dim(0);
  const int in_n = weight.dim(1);
  const bool rg = x.requires_grad() || weight.requires_grad() || bias.requires_grad();

  Tensor<T> out = Tensor<T>::make_op(
      {out_n}, rg, {x.handle(), weight.handle(), bias.handle()},
      [out_n, in_n](detail::TensorNode<T>& n) {
        auto& xi = *n.inputs[0];
        auto& wi = *n.inputs[1];
        auto& bi = *n.inputs[2];
        if (xi.requires_grad) {
          for (int o = 0; o < out_n; ++o) {
            const T g = n.grad[o];
            const T* wrow = wi.value.data() + static_cast<size_t>(o) * in_n;
            for (int i = 0; i < in_n; ++i) xi.grad[i] += g * wrow[i];
          }
        }
        if (wi.requires_grad) {
          for (int o = 0; o < out_n; ++o) {
            const T g = n.grad[o];
            T* grow = wi.grad.data() + static_cast<size_t>(o) * in_n;
            const T* xv = xi.value.data();
            for (int i = 0; i < in_n; ++i) grow[i] += g * xv[i];
          }
        }
        if (bi.requires_grad) {
          for (int o = 0; o < out_n; ++o) bi.grad[o] += n.grad[o];
        }
      });

  auto xv = x.values();
  auto wv = weight.values();
  auto bv = bias.values();
  auto ov = out.values_mut();
  for (int o = 0; o < out_n; ++o) {
    T acc = bv[o];
    const T* wrow = wv.data() + static_cast<size_t>(o) * in_n;
    for (int i = 0; i < in_n; ++i) acc += wrow[i] * xv[i];
    ov[o] = acc;
  }
  return out;
}

template <typename T>
Tensor<T> mse_scalar(const Tensor<T>& pred, const Tensor<T>& target) {
  check_same_shape(pred, target, "mse_scalar");
  const size_t n = pred.size();
  Tensor<T> out = Tensor<T>::make_op(
      {1}, pred.requires_grad(), {pred.handle(), target.handle()},
      [n](detail::TensorNode<T>& n_) {
        auto& p = *n_.inputs[0];
        auto& t = *n_.inputs[1];
        const T g = n_.grad[0];
        if (p.requires_grad) {
          for (size_t i = 0; i < n; ++i)
            p.grad[i] += g * T{2} * (p.value[i] - t.value[i]) / static_cast<T>(n);
        }
      });
  T acc{0};
  auto pv = pred.values();
  auto tv = target.values();
  for (size_t i = 0; i < n; ++i) {
    const T d = pv[i] - tv[i];
    acc += d * d;
  }
  out.values_mut()[0] = acc / static_cast<T>(n);
  return out;
}

// ---------------------------------------------------------------------------
// Explicit instantiations
// ---------------------------------------------------------------------------

template class Tensor<float>;
template class Tensor<double>;

#define POLARSCAN_INSTANTIATE_OPS(T)                                              \
  template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                     \
  template Tensor<T> scale(const Tensor<T>&, T);                                  \
  template Tensor<T> relu(const Tensor<T>&);                                      \
  template Tensor<T> sum(const Tensor<T>&);                                       \
  template Tensor<T> concat_channels(std::span<const Tensor<T>>);                 \
  template Tensor<T> maxpool2x2(const Tensor<T>&);                                \
  template Tensor<T> flatten(const Tensor<T>&);                                   \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&); \
  template Tensor<T> mse_scalar(const Tensor<T>&, const Tensor<T>&);

POLARSCAN_INSTANTIATE_OPS(float)
POLARSCAN_INSTANTIATE_OPS(double)

}  // namespace polarscan
