#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polarscan/forward_model.hpp"

namespace polarscan {

struct OrientationLabel {
  double phi_deg = 0.0;    // [0, 180)
  double theta_deg = 0.0;  // [0, 180)
};

// One training/testing unit: the preprocessed {sxx, sxy, syy} triple
// (64x64, values in [0,1], one shared affine map) plus its label.
struct PolarimetricSet {
  ScatteringTriple triple;
  OrientationLabel label;
  double norm_offset = 0.0;
  double norm_scale = 0.0;  // 0 marks a degenerate (constant) raw set
};

struct SampleEntry {
  int id = 0;
  std::string dir;  // relative to the dataset root
  OrientationLabel label;
  std::map<std::string, uint32_t> file_crc32;  // filename -> whole-file CRC
};

struct DatasetManifest {
  uint32_t format_version = 1;
  std::string mode;  // "grid" or "random"
  uint64_t seed = 0;
  std::optional<double> step_deg;  // grid mode
  std::optional<int> count;        // random mode
  bool match_paper_count = false;
  SceneSpec scene;  // generation scene shared by every sample
  std::vector<SampleEntry> samples;
};

inline constexpr int kImageSize = 64;

// Scene used for dataset generation. The reference scenario's 28 mm burial
// depth puts the bar above the surface for most theta, so generation runs
// with the bar center at 0.10 m; everything else keeps the defaults.
SceneSpec generation_scene();

// Bilinear resize with corner-aligned sampling. Input dims must be >= 2.
Radargram resize_bilinear(const Radargram& r, int out_rows, int out_cols);

// Joint [0,1] normalization: one affine map over all three components so
// inter-component amplitude ratios survive. A constant raw set maps to 0.5
// everywhere and records norm_scale = 0. Output values are quantized
// through f32 so in-memory grids equal their on-disk representation.
PolarimetricSet normalize_set(const ScatteringTriple& raw);

// Full preprocessing: resize each component to kImageSize, then normalize.
PolarimetricSet preprocess(const ScatteringTriple& raw, const OrientationLabel& label);

// Sample directory layout: <dir>/{sxx.grd, sxy.grd, syy.grd, label.json}.
void write_sample(const std::filesystem::path& dir, const PolarimetricSet& s,
                  const SceneSpec& scene, uint64_t seed);
PolarimetricSet read_sample(const std::filesystem::path& dir);

// Grid dataset over {0, step, ..., 180-step}^2. match_paper_count drops the
// last theta row (theta = 180-step), matching the reported 36x35 count at
// the 5-degree step. Writes samples plus <out_dir>/manifest.json.
DatasetManifest generate_grid(const std::filesystem::path& out_dir, double step_deg,
                              uint64_t seed, bool match_paper_count = false,
                              const SceneSpec& scene = generation_scene());

// n samples with phi, theta drawn uniformly from [0, 180).
DatasetManifest generate_random(const std::filesystem::path& out_dir, int n,
                                uint64_t seed, const SceneSpec& scene = generation_scene());

void write_manifest(const std::filesystem::path& out_dir, const DatasetManifest& m);
DatasetManifest read_manifest(const std::filesystem::path& dataset_dir);

// Re-checks that every manifest entry exists with matching checksums and
// that no extra sample directories are present.
void verify_manifest(const std::filesystem::path& dataset_dir, const DatasetManifest& m);

// Loads every sample listed in the manifest, in manifest order.
std::vector<PolarimetricSet> load_dataset(const std::filesystem::path& dataset_dir);

}  // namespace polarscan
