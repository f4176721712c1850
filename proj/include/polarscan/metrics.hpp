#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "polarscan/masnet.hpp"

namespace polarscan {

struct MetricsSummary {
  std::string method;
  size_t n_samples = 0;
  double mse_phi_deg2 = 0.0;
  std::optional<double> mse_theta_deg2;  // absent for phi-only estimators
  double circular_mse_phi_deg2 = 0.0;
  std::optional<double> circular_mse_theta_deg2;
  double max_abs_error_deg = 0.0;  // circular, over both angles
};

// Plain per-angle MSE (squared degree differences) plus the circular
// variants using d(a,b) = min(|a-b|, 180-|a-b|). Estimates with NaN theta
// (the Alford case) produce summaries without theta entries.
MetricsSummary mse_deg(const std::vector<std::pair<EstimationResult, OrientationLabel>>& results);

struct AblationRow {
  std::vector<Component> subset;
  double mse_phi_deg2 = 0.0;
  double mse_theta_deg2 = 0.0;
};

// Trains one model per subset with identical seeds/settings and evaluates
// each on the test set. progress, when set, receives one line per subset.
std::vector<AblationRow> run_ablation(
    const std::vector<PolarimetricSet>& train_data,
    const std::vector<PolarimetricSet>& test_data,
    const std::vector<std::vector<Component>>& subsets, const ModelConfig& base_model,
    const TrainConfig& shared_cfg,
    const std::function<void(const std::string&)>& progress = nullptr);

struct ComparisonRow {
  std::string method;
  std::string source;  // "live" or "paper-reported"
  std::optional<double> mse_phi_deg2;
  std::optional<double> mse_theta_deg2;
};

// Two live rows from the given runs plus the flagged static reference rows
// (reported values from other data; never recomputed here).
std::vector<ComparisonRow> compare_methods(const MetricsSummary& masnet_live,
                                           const MetricsSummary& alford_live);

// CSV writers; every file is a deterministic function of its inputs
// (fixed ordering, %.6g value formatting).
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsSummary>& rows);
void write_ablation_csv(const std::filesystem::path& path,
                        const std::vector<AblationRow>& rows);
void write_comparison_csv(const std::filesystem::path& path,
                          const std::vector<ComparisonRow>& rows);
void write_predictions_csv(
    const std::filesystem::path& path,
    const std::vector<std::pair<EstimationResult, OrientationLabel>>& results);

std::string format_g6(double v);

}  // namespace polarscan
