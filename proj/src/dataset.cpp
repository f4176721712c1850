#include "polarscan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "polarscan/config_json.hpp"
#include "polarscan/errors.hpp"
#include "polarscan/grd_io.hpp"
#include "polarscan/rng.hpp"

namespace polarscan {

namespace fs = std::filesystem;

SceneSpec generation_scene() {
  SceneSpec s;
  s.center_depth_m = 0.10;
  return s;
}

Radargram resize_bilinear(const Radargram& r, int out_rows, int out_cols) {
  if (r.n_traces < 2 || r.n_time < 2) {
    throw ShapeError("resize_bilinear needs input dims >= 2");
  }
  Radargram out;
  out.n_traces = out_rows;
  out.n_time = out_cols;
  out.values.resize(static_cast<size_t>(out_rows) * out_cols);
  // Corner-aligned: first/last samples coincide with the input corners.
  const double row_scale = static_cast<double>(r.n_traces - 1) / (out_rows - 1);
  const double col_scale = static_cast<double>(r.n_time - 1) / (out_cols - 1);
  out.dx_m = r.dx_m * row_scale;
  out.dt_s = r.dt_s * col_scale;
  out.t0_s = r.t0_s;

  for (int i = 0; i < out_rows; ++i) {
    const double y = i * row_scale;
    const int y0 = std::min(static_cast<int>(y), r.n_traces - 2);
    const double fy = y - y0;
    for (int j = 0; j < out_cols; ++j) {
      const double x = j * col_scale;
      const int x0 = std::min(static_cast<int>(x), r.n_time - 2);
      const double fx = x - x0;
      const double v00 = r.at(y0, x0), v01 = r.at(y0, x0 + 1);
      const double v10 = r.at(y0 + 1, x0), v11 = r.at(y0 + 1, x0 + 1);
      out.values[static_cast<size_t>(i) * out_cols + j] =
          (1.0 - fy) * ((1.0 - fx) * v00 + fx * v01) +
          fy * ((1.0 - fx) * v10 + fx * v11);
    }
  }
  return out;
}

PolarimetricSet normalize_set(const ScatteringTriple& raw) {
  const Radargram* comps[3] = {&raw.sxx, &raw.sxy, &raw.syy};
  double lo = raw.sxx.values[0], hi = raw.sxx.values[0];
  for (const Radargram* c : comps) {
    for (double v : c->values) {
      if (!std::isfinite(v)) throw ShapeError("normalize_set: non-finite value");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }

  PolarimetricSet s;
  s.norm_offset = lo;
  s.norm_scale = hi - lo;
  auto map_gram = [&](const Radargram& g) {
    Radargram out = g;
    for (double& v : out.values) {
      const double y = s.norm_scale > 0.0 ? (v - s.norm_offset) / s.norm_scale : 0.5;
      v = static_cast<double>(static_cast<float>(y));
    }
    return out;
  };
  s.triple.sxx = map_gram(raw.sxx);
  s.triple.sxy = map_gram(raw.sxy);
  s.triple.syy = map_gram(raw.syy);
  return s;
}

PolarimetricSet preprocess(const ScatteringTriple& raw, const OrientationLabel& label) {
  ScatteringTriple resized;
  resized.sxx = resize_bilinear(raw.sxx, kImageSize, kImageSize);
  resized.sxy = resize_bilinear(raw.sxy, kImageSize, kImageSize);
  resized.syy = resize_bilinear(raw.syy, kImageSize, kImageSize);
  PolarimetricSet s = normalize_set(resized);
  s.label = label;
  return s;
}

namespace {

constexpr uint32_t kSampleFormatVersion = 1;

uint32_t file_crc(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open: " + p.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  return crc32_bytes(bytes.data(), bytes.size());
}

std::string sample_dir_name(int id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%05d", id);
  return buf;
}

SampleEntry write_one_sample(const fs::path& root, int id, const PolarimetricSet& s,
                             const SceneSpec& scene, uint64_t seed) {
  SampleEntry e;
  e.id = id;
  e.dir = sample_dir_name(id);
  e.label = s.label;
  const fs::path dir = root / e.dir;
  write_sample(dir, s, scene, seed);
  for (const char* f : {"sxx.grd", "sxy.grd", "syy.grd", "label.json"}) {
    e.file_crc32[f] = file_crc(dir / f);
  }
  return e;
}

}  // namespace

void write_sample(const fs::path& dir, const PolarimetricSet& s, const SceneSpec& scene,
                  uint64_t seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  write_grd(dir / "sxx.grd", s.triple.sxx);
  write_grd(dir / "sxy.grd", s.triple.sxy);
  write_grd(dir / "syy.grd", s.triple.syy);

  Json j;
  j["phi_deg"] = s.label.phi_deg;
  j["theta_deg"] = s.label.theta_deg;
  j["seed"] = seed;
  j["scene"] = scene;
  j["normalized"] = true;
  j["norm_offset"] = s.norm_offset;
  j["norm_scale"] = s.norm_scale;
  std::ofstream out(dir / "label.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "label.json").string());
  out << j.dump(2) << "\n";
}

PolarimetricSet read_sample(const fs::path& dir) {
  PolarimetricSet s;
  s.triple.sxx = read_grd(dir / "sxx.grd");
  s.triple.sxy = read_grd(dir / "sxy.grd");
  s.triple.syy = read_grd(dir / "syy.grd");
  if (!s.triple.sxx.same_grid(s.triple.sxy) || !s.triple.sxx.same_grid(s.triple.syy)) {
    throw FormatError("sample components disagree on grid: " + dir.string());
  }

  const fs::path lp = dir / "label.json";
  std::ifstream in(lp);
  if (!in) throw IoError("cannot open: " + lp.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad label.json: " + lp.string() + ": " + e.what());
  }
  s.label.phi_deg = j.at("phi_deg").get<double>();
  s.label.theta_deg = j.at("theta_deg").get<double>();
  s.norm_offset = j.at("norm_offset").get<double>();
  s.norm_scale = j.at("norm_scale").get<double>();
  return s;
}

namespace {

template <typename J>
J manifest_to_json(const DatasetManifest& m) {
  J j;
  j["format_version"] = m.format_version;
  j["mode"] = m.mode;
  j["seed"] = m.seed;
  if (m.step_deg) j["step_deg"] = *m.step_deg;
  if (m.count) j["count"] = *m.count;
  j["match_paper_count"] = m.match_paper_count;
  j["scene"] = m.scene;
  auto samples = J::array();
  for (const SampleEntry& e : m.samples) {
    J je;
    je["id"] = e.id;
    je["dir"] = e.dir;
    je["phi_deg"] = e.label.phi_deg;
    je["theta_deg"] = e.label.theta_deg;
    J files;
    for (const auto& [name, crc] : e.file_crc32) files[name] = crc;
    je["files"] = files;
    samples.push_back(je);
  }
  j["samples"] = samples;
  return j;
}

}  // namespace

void write_manifest(const fs::path& out_dir, const DatasetManifest& m) {
  std::ofstream out(out_dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write manifest in " + out_dir.string());
  out << manifest_to_json<Json>(m).dump(2) << "\n";
}

DatasetManifest read_manifest(const fs::path& dataset_dir) {
  const fs::path mp = dataset_dir / "manifest.json";
  std::ifstream in(mp);
  if (!in) throw IoError("cannot open: " + mp.string());
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest.json: " + mp.string() + ": " + e.what());
  }
  DatasetManifest m;
  m.format_version = j.at("format_version").get<uint32_t>();
  if (m.format_version != 1) {
    throw VersionError("unsupported manifest version " + std::to_string(m.format_version));
  }
  m.mode = j.at("mode").get<std::string>();
  m.seed = j.at("seed").get<uint64_t>();
  if (j.contains("step_deg")) m.step_deg = j.at("step_deg").get<double>();
  if (j.contains("count")) m.count = j.at("count").get<int>();
  m.match_paper_count = j.at("match_paper_count").get<bool>();
  m.scene = j.at("scene").get<SceneSpec>();
  std::set<int> ids;
  for (const auto& je : j.at("samples")) {
    SampleEntry e;
    e.id = je.at("id").get<int>();
    e.dir = je.at("dir").get<std::string>();
    e.label.phi_deg = je.at("phi_deg").get<double>();
    e.label.theta_deg = je.at("theta_deg").get<double>();
    for (const auto& [name, crc] : je.at("files").items()) {
      e.file_crc32[name] = crc.template get<uint32_t>();
    }
    if (!ids.insert(e.id).second) {
      throw FormatError("duplicate sample id " + std::to_string(e.id));
    }
    m.samples.push_back(std::move(e));
  }
  return m;
}

void verify_manifest(const fs::path& dataset_dir, const DatasetManifest& m) {
  std::set<std::string> listed;
  for (const SampleEntry& e : m.samples) {
    listed.insert(e.dir);
    for (const auto& [name, crc] : e.file_crc32) {
      const fs::path p = dataset_dir / e.dir / name;
      if (!fs::exists(p)) throw IoError("manifest entry missing on disk: " + p.string());
      if (file_crc(p) != crc) throw ChecksumError("manifest checksum mismatch: " + p.string());
    }
  }
  for (const auto& entry : fs::directory_iterator(dataset_dir)) {
    if (!entry.is_directory()) continue;
    const std::string name = entry.path().filename().string();
    if (name.rfind("sample_", 0) == 0 && !listed.count(name)) {
      throw FormatError("sample directory not in manifest: " + name);
    }
  }
}

namespace {

DatasetManifest generate_from_labels(const fs::path& out_dir,
                                     const std::vector<OrientationLabel>& labels,
                                     const SceneSpec& base, uint64_t seed,
                                     DatasetManifest m) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  int id = 0;
  for (const OrientationLabel& label : labels) {
    SceneSpec scene = base;
    scene.phi_deg = label.phi_deg;
    scene.theta_deg = label.theta_deg;
    const ScatteringTriple raw = synthesize_set(scene);
    const PolarimetricSet s = preprocess(raw, label);
    m.samples.push_back(write_one_sample(out_dir, id, s, scene, seed));
    ++id;
  }
  write_manifest(out_dir, m);
  return m;
}

}  // namespace

DatasetManifest generate_grid(const fs::path& out_dir, double step_deg, uint64_t seed,
                              bool match_paper_count, const SceneSpec& scene) {
  if (step_deg <= 0.0 || std::fmod(180.0, step_deg) != 0.0) {
    throw InvalidSceneError("step_deg must divide 180");
  }
  const int n = static_cast<int>(std::lround(180.0 / step_deg));
  const int n_theta = match_paper_count ? n - 1 : n;
  std::vector<OrientationLabel> labels;
  labels.reserve(static_cast<size_t>(n) * n_theta);
  for (int pi = 0; pi < n; ++pi) {
    for (int ti = 0; ti < n_theta; ++ti) {
      labels.push_back({pi * step_deg, ti * step_deg});
    }
  }

  DatasetManifest m;
  m.mode = "grid";
  m.seed = seed;
  m.step_deg = step_deg;
  m.match_paper_count = match_paper_count;
  m.scene = scene;
  return generate_from_labels(out_dir, labels, scene, seed, std::move(m));
}

DatasetManifest generate_random(const fs::path& out_dir, int n, uint64_t seed,
                                const SceneSpec& scene) {
  if (n < 1) throw InvalidSceneError("generate_random needs n >= 1");
  Rng rng(seed);
  std::vector<OrientationLabel> labels;
  labels.reserve(n);
  for (int i = 0; i < n; ++i) {
    labels.push_back({rng.uniform(0.0, 180.0), rng.uniform(0.0, 180.0)});
  }

  DatasetManifest m;
  m.mode = "random";
  m.seed = seed;
  m.count = n;
  m.scene = scene;
  return generate_from_labels(out_dir, labels, scene, seed, std::move(m));
}

std::vector<PolarimetricSet> load_dataset(const fs::path& dataset_dir) {
  const DatasetManifest m = read_manifest(dataset_dir);
  std::vector<PolarimetricSet> out;
  out.reserve(m.samples.size());
  for (const SampleEntry& e : m.samples) {
    PolarimetricSet s = read_sample(dataset_dir / e.dir);
    // The manifest label is authoritative; the sample echoes it.
    s.label = e.label;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace polarscan
