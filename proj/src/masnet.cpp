#include "polarscan/masnet.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "polarscan/checkpoint.hpp"
#include "polarscan/errors.hpp"
#include "polarscan/rng.hpp"

namespace polarscan {

std::string component_name(Component c) {
  switch (c) {
    case Component::kSxx: return "xx";
    case Component::kSxy: return "xy";
    case Component::kSyy: return "yy";
  }
  throw ShapeError("unknown component");
}

Component component_from_name(const std::string& name) {
  if (name == "xx") return Component::kSxx;
  if (name == "xy") return Component::kSxy;
  if (name == "yy") return Component::kSyy;
  throw ShapeError("unknown component name: " + name);
}

std::vector<Component> parse_components(const std::string& csv) {
  std::vector<Component> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(component_from_name(cur));
    cur.clear();
  };
  for (char ch : csv) {
    if (ch == ',') {
      flush();
    } else if (!std::isspace(static_cast<unsigned char>(ch))) {
      cur += ch;
    }
  }
  flush();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::string components_str(const std::vector<Component>& cs) {
  std::string s;
  for (const Component& c : cs) {
    if (!s.empty()) s += ",";
    s += component_name(c);
  }
  return s;
}

std::vector<std::vector<Component>> build_groups(const std::vector<Component>& components) {
  if (components.empty()) throw ShapeError("build_groups: empty component set");
  std::vector<Component> sorted = components;
  std::sort(sorted.begin(), sorted.end());
  const int n = static_cast<int>(sorted.size());
  std::vector<std::vector<Component>> groups;
  // Masks of equal popcount ordered by value enumerate each size class
  // lexicographically over the sorted components.
  for (int size = 1; size <= n; ++size) {
    for (int mask = 1; mask < (1 << n); ++mask) {
      if (std::popcount(static_cast<unsigned>(mask)) != size) continue;
      std::vector<Component> g;
      for (int i = 0; i < n; ++i) {
        if (mask & (1 << i)) g.push_back(sorted[i]);
      }
      groups.push_back(std::move(g));
    }
  }
  return groups;
}

void ModelConfig::validate() const {
  if (components.empty()) throw ShapeError("ModelConfig: components must be non-empty");
  if (channels < 1) throw ShapeError("ModelConfig: channels must be >= 1");
  if (fc_width < 2) throw ShapeError("ModelConfig: fc_width must be >= 2");
  if (input_size < 2) throw ShapeError("ModelConfig: input_size must be >= 2");
  if (spatial_mode == SpatialMode::kCompact && input_size % 4 != 0) {
    throw ShapeError("ModelConfig: compact mode needs input_size divisible by 4");
  }
  if (angle_scale_deg <= 0.0) throw ShapeError("ModelConfig: angle_scale_deg must be > 0");
}

int ModelConfig::flatten_width() const {
  const int s = spatial_mode == SpatialMode::kCompact ? input_size / 4 : input_size;
  return channels * s * s;
}

template <typename T>
const Tensor<T>& MasnetModel<T>::param(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw ShapeError("no such parameter: " + name);
  return params[it->second].tensor;
}

template <typename T>
Tensor<T>& MasnetModel<T>::param(const std::string& name) {
  auto it = index.find(name);
  if (it == index.end()) throw ShapeError("no such parameter: " + name);
  return params[it->second].tensor;
}

template <typename T>
size_t MasnetModel<T>::parameter_count() const {
  size_t n = 0;
  for (const Parameter<T>& p : params) n += p.tensor.size();
  return n;
}

template <typename T>
void MasnetModel<T>::zero_grads() {
  for (Parameter<T>& p : params) p.tensor.zero_grad();
}

template <typename T>
MasnetModel<T> build_model(const ModelConfig& cfg, uint64_t seed, InitMode init) {
  cfg.validate();
  MasnetModel<T> model;
  model.config = cfg;
  model.groups = build_groups(cfg.components);
  Rng rng(seed);

  auto add_param = [&](const std::string& name, Tensor<T> t) {
    model.index[name] = model.params.size();
    model.params.push_back({name, std::move(t)});
  };
  auto add_conv = [&](const std::string& prefix, int cout, int cin) {
    add_param(prefix + ".weight", gaussian_init<T>({cout, cin, 3, 3}, cin * 9, init, rng));
    add_param(prefix + ".bias", Tensor<T>::zeros({cout}, true));
  };
  auto add_fc = [&](const std::string& prefix, int out_n, int in_n) {
    add_param(prefix + ".weight", gaussian_init<T>({out_n, in_n}, in_n, init, rng));
    add_param(prefix + ".bias", Tensor<T>::zeros({out_n}, true));
  };

  const int ch = cfg.channels;
  for (size_t gi = 0; gi < model.groups.size(); ++gi) {
    const std::string g = "group" + std::to_string(gi);
    add_conv(g + ".lift", ch, static_cast<int>(model.groups[gi].size()));
    add_conv(g + ".block.conv1", ch, ch);
    add_conv(g + ".block.conv2", ch, ch);
    add_conv(g + ".block.conv3", ch, ch);
  }
  add_conv("trunk.conv1", ch, ch * static_cast<int>(model.groups.size()));
  add_conv("trunk.conv2", ch, ch);
  add_fc("fc", cfg.fc_width, cfg.flatten_width());
  for (const char* head : {"head_phi", "head_theta"}) {
    add_fc(std::string(head) + ".fc1", cfg.fc_width, cfg.fc_width);
    add_fc(std::string(head) + ".out", 1, cfg.fc_width);
  }
  return model;
}

template <typename T>
std::array<Tensor<T>, 3> sample_inputs(const PolarimetricSet& s, int input_size) {
  const Radargram* grams[3] = {&s.triple.sxx, &s.triple.sxy, &s.triple.syy};
  std::array<Tensor<T>, 3> out;
  for (int c = 0; c < 3; ++c) {
    const Radargram& g = *grams[c];
    if (g.n_traces != input_size || g.n_time != input_size) {
      throw ShapeError("sample grid is " + std::to_string(g.n_traces) + "x" +
                       std::to_string(g.n_time) + ", model expects " +
                       std::to_string(input_size));
    }
    std::vector<T> vals(g.values.size());
    for (size_t i = 0; i < vals.size(); ++i) vals[i] = static_cast<T>(g.values[i]);
    out[c] = Tensor<T>::constant({1, input_size, input_size}, std::move(vals));
  }
  return out;
}

template <typename T>
std::pair<Tensor<T>, Tensor<T>> forward_graph(const MasnetModel<T>& model,
                                              const std::array<Tensor<T>, 3>& inputs) {
  const ModelConfig& cfg = model.config;
  std::vector<Tensor<T>> group_features;
  group_features.reserve(model.groups.size());

  for (size_t gi = 0; gi < model.groups.size(); ++gi) {
    const std::string g = "group" + std::to_string(gi);
    std::vector<Tensor<T>> parts;
    for (Component c : model.groups[gi]) {
      const Tensor<T>& t = inputs[static_cast<int>(c)];
      if (!t.defined()) throw ShapeError("missing input component " + component_name(c));
      parts.push_back(t);
    }
    Tensor<T> x = parts.size() == 1 ? parts[0] : concat_channels<T>(parts);
    // Lift to the working channel width so the block skip is an identity.
    Tensor<T> h0 = conv2d(x, model.param(g + ".lift.weight"), model.param(g + ".lift.bias"));
    Tensor<T> h = relu(conv2d(h0, model.param(g + ".block.conv1.weight"),
                              model.param(g + ".block.conv1.bias")));
    h = relu(conv2d(h, model.param(g + ".block.conv2.weight"),
                    model.param(g + ".block.conv2.bias")));
    h = conv2d(h, model.param(g + ".block.conv3.weight"),
               model.param(g + ".block.conv3.bias"));
    group_features.push_back(relu(add(h, h0)));
  }

  Tensor<T> x = group_features.size() == 1 ? group_features[0]
                                           : concat_channels<T>(group_features);
  x = relu(conv2d(x, model.param("trunk.conv1.weight"), model.param("trunk.conv1.bias")));
  if (cfg.spatial_mode == SpatialMode::kCompact) x = maxpool2x2(x);
  x = relu(conv2d(x, model.param("trunk.conv2.weight"), model.param("trunk.conv2.bias")));
  if (cfg.spatial_mode == SpatialMode::kCompact) x = maxpool2x2(x);

  Tensor<T> f = relu(linear(flatten(x), model.param("fc.weight"), model.param("fc.bias")));

  auto head = [&](const std::string& name) {
    Tensor<T> h = relu(linear(f, model.param(name + ".fc1.weight"),
                              model.param(name + ".fc1.bias")));
    Tensor<T> o = linear(h, model.param(name + ".out.weight"),
                         model.param(name + ".out.bias"));
    return scale(o, static_cast<T>(cfg.angle_scale_deg));
  };
  return {head("head_phi"), head("head_theta")};
}

template <typename T>
EstimationResult estimate(const MasnetModel<T>& model, const PolarimetricSet& s) {
  const auto inputs = sample_inputs<T>(s, model.config.input_size);
  const auto [phi, theta] = forward_graph(model, inputs);
  return {static_cast<double>(phi.item()), static_cast<double>(theta.item()), "masnet"};
}

double loss_deg2(const std::vector<EstimationResult>& pred,
                 const std::vector<OrientationLabel>& gt) {
  if (pred.size() != gt.size()) throw ShapeError("loss_deg2: batch length mismatch");
  if (pred.empty()) throw ShapeError("loss_deg2: empty batch");
  double acc = 0.0;
  for (size_t i = 0; i < pred.size(); ++i) {
    const double dp = pred[i].phi_hat_deg - gt[i].phi_deg;
    const double dt = pred[i].theta_hat_deg - gt[i].theta_deg;
    acc += dp * dp + dt * dt;
  }
  return acc / static_cast<double>(pred.size());
}

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ShapeError("TrainConfig: lr must be > 0");
  if (batch_size < 1) throw ShapeError("TrainConfig: batch_size must be >= 1");
  if (epochs < 1) throw ShapeError("TrainConfig: epochs must be >= 1");
}

namespace {

// Per-sample squared-error node: (phi_hat - phi)^2 + (theta_hat - theta)^2.
Tensor<float> sample_loss_graph(const MasnetModel<float>& model,
                                const PolarimetricSet& s) {
  const auto inputs = sample_inputs<float>(s, model.config.input_size);
  const auto [phi, theta] = forward_graph(model, inputs);
  Tensor<float> dphi =
      sub(phi, Tensor<float>::constant({1}, {static_cast<float>(s.label.phi_deg)}));
  Tensor<float> dtheta =
      sub(theta, Tensor<float>::constant({1}, {static_cast<float>(s.label.theta_deg)}));
  return add(mul(dphi, dphi), mul(dtheta, dtheta));
}

}  // namespace

TrainResult train(MasnetModel<float>& model, const std::vector<PolarimetricSet>& data,
                  const TrainConfig& cfg,
                  const std::optional<std::filesystem::path>& out_dir) {
  cfg.validate();
  if (data.empty()) throw ShapeError("train: empty dataset");

  std::ofstream loss_csv;
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    loss_csv.open(*out_dir / "loss.csv", std::ios::trunc);
    if (!loss_csv) throw IoError("cannot write loss.csv in " + out_dir->string());
    loss_csv << "epoch,mean_loss_deg2\n";
  }

  AdamState<float> adam = AdamState<float>::init(model.params, AdamConfig{.lr = cfg.lr});
  Rng rng(cfg.seed);
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  TrainResult result;
  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    if (cfg.shuffle) rng.shuffle(order);
    double epoch_sum = 0.0;
    size_t epoch_count = 0;

    const int n_batches =
        static_cast<int>((data.size() + cfg.batch_size - 1) / cfg.batch_size);
    for (int b = 0; b < n_batches && !done; ++b) {
      const size_t lo = static_cast<size_t>(b) * cfg.batch_size;
      const size_t hi = std::min(data.size(), lo + cfg.batch_size);
      const float inv = 1.0f / static_cast<float>(hi - lo);

      model.zero_grads();
      double batch_sum = 0.0;
      for (size_t k = lo; k < hi; ++k) {
        Tensor<float> l = sample_loss_graph(model, data[order[k]]);
        l.backward(inv);
        batch_sum += static_cast<double>(l.item());
      }
      const double batch_loss = batch_sum / static_cast<double>(hi - lo);
      if (!std::isfinite(batch_loss)) {
        throw TrainingDivergedError(epoch, b, batch_loss,
                                    "training diverged: non-finite loss " +
                                        std::to_string(batch_loss) + " at epoch " +
                                        std::to_string(epoch) + " batch " +
                                        std::to_string(b));
      }
      adam_step(model.params, adam);
      epoch_sum += batch_sum;
      epoch_count += hi - lo;
      result.steps += 1;

      if (cfg.stop_loss_deg2 > 0.0 && batch_loss < cfg.stop_loss_deg2) {
        result.stopped_early = true;
        done = true;
      }
      if (cfg.max_steps > 0 && result.steps >= cfg.max_steps) done = true;
    }

    const double epoch_mean = epoch_sum / static_cast<double>(epoch_count);
    result.epoch_mean_loss.push_back(epoch_mean);
    if (loss_csv) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%d,%.6g\n", epoch, epoch_mean);
      loss_csv << buf;
    }
  }

  if (out_dir) {
    save_checkpoint(*out_dir / "checkpoint.masn", model.params);
  }
  return result;
}

std::vector<std::pair<EstimationResult, OrientationLabel>> evaluate(
    const MasnetModel<float>& model, const std::vector<PolarimetricSet>& data) {
  std::vector<std::pair<EstimationResult, OrientationLabel>> out;
  out.reserve(data.size());
  for (const PolarimetricSet& s : data) {
    out.emplace_back(estimate(model, s), s.label);
  }
  return out;
}

#define POLARSCAN_INSTANTIATE_MASNET(T)                                        \
  template struct MasnetModel<T>;                                              \
  template MasnetModel<T> build_model(const ModelConfig&, uint64_t, InitMode); \
  template std::array<Tensor<T>, 3> sample_inputs(const PolarimetricSet&, int); \
  template std::pair<Tensor<T>, Tensor<T>> forward_graph(                      \
      const MasnetModel<T>&, const std::array<Tensor<T>, 3>&);                 \
  template EstimationResult estimate(const MasnetModel<T>&, const PolarimetricSet&);

POLARSCAN_INSTANTIATE_MASNET(float)
POLARSCAN_INSTANTIATE_MASNET(double)

}  // namespace polarscan
