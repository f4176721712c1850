#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarscan/dataset.hpp"
#include "polarscan/optim.hpp"
#include "polarscan/tensor.hpp"

namespace polarscan {

enum class Component : int { kSxx = 0, kSxy = 1, kSyy = 2 };

std::string component_name(Component c);                       // "xx" | "xy" | "yy"
Component component_from_name(const std::string& name);
std::vector<Component> parse_components(const std::string& csv);  // "xx,xy,yy"
std::string components_str(const std::vector<Component>& cs);

// All non-empty subsets of `components`: singletons, then pairs, then the
// triple, each lexicographic.
std::vector<std::vector<Component>> build_groups(const std::vector<Component>& components);

enum class SpatialMode { kCompact, kFaithful };

struct ModelConfig {
  std::vector<Component> components{Component::kSxx, Component::kSxy, Component::kSyy};
  int channels = 32;
  int fc_width = 1024;
  SpatialMode spatial_mode = SpatialMode::kCompact;
  int input_size = kImageSize;
  double angle_scale_deg = 175.0;  // head outputs are normalized, then scaled

  void validate() const;
  int group_count() const { return (1 << components.size()) - 1; }
  // Width of the flattened trunk output feeding the shared FC layer.
  int flatten_width() const;
};

struct EstimationResult {
  double phi_hat_deg = 0.0;
  double theta_hat_deg = 0.0;
  std::string method;
};

template <typename T>
struct MasnetModel {
  ModelConfig config;
  std::vector<std::vector<Component>> groups;
  std::vector<Parameter<T>> params;
  std::map<std::string, size_t> index;

  const Tensor<T>& param(const std::string& name) const;
  Tensor<T>& param(const std::string& name);
  size_t parameter_count() const;
  void zero_grads();
};

// Builds a model with Gaussian-initialized weights and zero biases; the
// parameter order (and therefore the init stream) is fixed.
template <typename T>
MasnetModel<T> build_model(const ModelConfig& cfg, uint64_t seed,
                           InitMode init = InitMode::kScaled);

// Input tensors for one preprocessed sample, indexed by Component.
template <typename T>
std::array<Tensor<T>, 3> sample_inputs(const PolarimetricSet& s, int input_size);

// Differentiable forward pass; returns the scaled (phi, theta) output nodes.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> forward_graph(const MasnetModel<T>& model,
                                              const std::array<Tensor<T>, 3>& inputs);

// Inference wrapper around forward_graph.
template <typename T>
EstimationResult estimate(const MasnetModel<T>& model, const PolarimetricSet& s);

// Squared-error training objective in degrees^2: mean over the batch of
// (phi error)^2 + (theta error)^2.
double loss_deg2(const std::vector<EstimationResult>& pred,
                 const std::vector<OrientationLabel>& gt);

struct TrainConfig {
  double lr = 1e-4;
  int batch_size = 16;
  int epochs = 64;
  uint64_t seed = 0;
  bool shuffle = true;
  bool deterministic = false;
  // Optional step-capped mode (used by the overfit check): when max_steps > 0
  // training runs at most that many optimizer steps, and stop_loss_deg2 > 0
  // stops early once a batch loss drops below it.
  int64_t max_steps = 0;
  double stop_loss_deg2 = 0.0;

  void validate() const;
};

struct TrainResult {
  std::vector<double> epoch_mean_loss;  // degrees^2
  int64_t steps = 0;
  bool stopped_early = false;
};

// Mini-batch Adam on the squared-error objective. Writes loss.csv and
// checkpoint.masn into out_dir when provided. Throws TrainingDivergedError
// (with epoch/batch/loss) if the loss goes non-finite.
TrainResult train(MasnetModel<float>& model, const std::vector<PolarimetricSet>& data,
                  const TrainConfig& cfg,
                  const std::optional<std::filesystem::path>& out_dir = std::nullopt);

// Pure inference over a dataset, order preserving.
std::vector<std::pair<EstimationResult, OrientationLabel>> evaluate(
    const MasnetModel<float>& model, const std::vector<PolarimetricSet>& data);

}  // namespace polarscan
