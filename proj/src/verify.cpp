#include "polarscan/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "polarscan/errors.hpp"
#include "polarscan/masnet.hpp"
#include "polarscan/rng.hpp"

namespace polarscan {

std::vector<double> conv2d_reference(const std::vector<double>& input, int cin, int h,
                                     int w, const std::vector<double>& weight, int cout,
                                     const std::vector<double>& bias) {
  const size_t plane = static_cast<size_t>(h) * w;
  std::vector<double> out(static_cast<size_t>(cout) * plane);
  for (int co = 0; co < cout; ++co) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = bias[co];
        for (int ci = 0; ci < cin; ++ci) {
          for (int ky = 0; ky < 3; ++ky) {
            const int iy = y + ky - 1;
            if (iy < 0 || iy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int ix = x + kx - 1;
              if (ix < 0 || ix >= w) continue;
              acc += weight[(static_cast<size_t>(co) * cin + ci) * 9 + ky * 3 + kx] *
                     input[static_cast<size_t>(ci) * plane + static_cast<size_t>(iy) * w + ix];
            }
          }
        }
        out[static_cast<size_t>(co) * plane + static_cast<size_t>(y) * w + x] = acc;
      }
    }
  }
  return out;
}

double grad_check(const std::function<Tensor<double>()>& f, Tensor<double>& probe,
                  double eps, size_t max_coords, uint64_t coord_seed) {
  if (!probe.requires_grad()) throw ShapeError("grad_check: probe must require grad");

  probe.zero_grad();
  f().backward();
  std::vector<double> analytic(probe.grad().begin(), probe.grad().end());

  std::vector<size_t> coords(probe.size());
  std::iota(coords.begin(), coords.end(), size_t{0});
  if (max_coords > 0 && coords.size() > max_coords) {
    Rng rng(coord_seed);
    rng.shuffle(coords);
    coords.resize(max_coords);
    std::sort(coords.begin(), coords.end());
  }

  double max_err = 0.0;
  auto vals = probe.values_mut();
  for (size_t i : coords) {
    const double saved = vals[i];
    vals[i] = saved + eps;
    const double f_plus = f().item();
    vals[i] = saved - eps;
    const double f_minus = f().item();
    vals[i] = saved;
    const double numeric = (f_plus - f_minus) / (2.0 * eps);
    const double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric), 1e-8});
    max_err = std::max(max_err, std::fabs(analytic[i] - numeric) / denom);
  }
  return max_err;
}

namespace {

std::vector<double> random_values(size_t n, Rng& rng, double scale = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.gaussian();
  return v;
}

// Values bounded away from zero so ReLU and maxpool probes avoid kinks.
std::vector<double> kink_safe_values(size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) {
    double g = rng.gaussian();
    if (std::fabs(g) < 0.25) g = g < 0.0 ? g - 0.25 : g + 0.25;
    x = g;
  }
  return v;
}

struct SuiteBuilder {
  std::vector<CheckResult> results;

  void run(const std::string& name, double tolerance,
           const std::function<Tensor<double>()>& f, Tensor<double>& probe, double eps,
           size_t max_coords = 0) {
    const double err = grad_check(f, probe, eps, max_coords, /*coord_seed=*/17);
    results.push_back({name, err, tolerance, err <= tolerance});
  }

  void record(const std::string& name, double value, double tolerance) {
    results.push_back({name, value, tolerance, value <= tolerance});
  }
};

void add_op_checks(SuiteBuilder& sb) {
  Rng rng(101);
  constexpr double kEps = 1e-6;

  {  // linear form: d(sum(w*x))/dw = x, exact up to roundoff
    Tensor<double> w = Tensor<double>::param({8}, random_values(8, rng));
    Tensor<double> x = Tensor<double>::constant({8}, random_values(8, rng));
    sb.run("linear-form", 1e-9, [&] { return sum(mul(w, x)); }, w, kEps);
  }
  {
    Tensor<double> a = Tensor<double>::param({3, 4, 4}, random_values(48, rng));
    Tensor<double> b = Tensor<double>::constant({3, 4, 4}, random_values(48, rng));
    sb.run("add", 1e-6, [&] { return sum(mul(add(a, b), b)); }, a, kEps);
    sb.run("sub", 1e-6, [&] { return sum(mul(sub(a, b), b)); }, a, kEps);
    sb.run("mul", 1e-6, [&] { return sum(mul(mul(a, b), a)); }, a, kEps);
    sb.run("scale", 1e-6, [&] { return scale(sum(scale(a, 2.5)), 0.125); }, a, kEps);
  }
  {
    Tensor<double> a = Tensor<double>::param({2, 4, 4}, kink_safe_values(32, rng));
    Tensor<double> b = Tensor<double>::constant({2, 4, 4}, random_values(32, rng));
    sb.run("relu", 1e-6, [&] { return sum(mul(relu(a), b)); }, a, kEps);
    sb.run("maxpool2x2", 1e-6, [&] { return sum(maxpool2x2(mul(a, b))); }, a, kEps);
  }
  {
    Tensor<double> a = Tensor<double>::param({2, 3, 3}, random_values(18, rng));
    Tensor<double> c = Tensor<double>::constant({3, 3, 3}, random_values(27, rng));
    Tensor<double> weights = Tensor<double>::constant({45}, random_values(45, rng));
    sb.run("concat-flatten", 1e-6,
           [&] {
             std::vector<Tensor<double>> p{a, c};
             return sum(mul(flatten(concat_channels<double>(p)), weights));
           },
           a, kEps);
  }
  {
    Tensor<double> x = Tensor<double>::param({6}, random_values(6, rng));
    Tensor<double> w = Tensor<double>::param({4, 6}, random_values(24, rng));
    Tensor<double> b = Tensor<double>::param({4}, random_values(4, rng));
    auto f = [&] { return sum(relu(linear(x, w, b))); };
    sb.run("linear-dx", 1e-6, f, x, kEps);
    sb.run("linear-dw", 1e-6, f, w, kEps);
    sb.run("linear-db", 1e-6, f, b, kEps);
  }
  {
    Tensor<double> in = Tensor<double>::param({2, 5, 5}, random_values(50, rng));
    Tensor<double> w = Tensor<double>::param({3, 2, 3, 3}, random_values(54, rng, 0.5));
    Tensor<double> b = Tensor<double>::param({3}, random_values(3, rng));
    Tensor<double> mask = Tensor<double>::constant({3, 5, 5}, random_values(75, rng));
    auto f = [&] { return sum(mul(conv2d(in, w, b), mask)); };
    sb.run("conv2d-dinput", 1e-6, f, in, kEps);
    sb.run("conv2d-dweight", 1e-6, f, w, kEps);
    sb.run("conv2d-dbias", 1e-6, f, b, kEps);
  }
  {
    Tensor<double> p = Tensor<double>::param({10}, random_values(10, rng));
    Tensor<double> t = Tensor<double>::constant({10}, random_values(10, rng));
    sb.run("mse-scalar", 1e-6, [&] { return mse_scalar(p, t); }, p, kEps);
  }
}

PolarimetricSet tiny_sample(int size, Rng& rng) {
  PolarimetricSet s;
  Radargram* grams[3] = {&s.triple.sxx, &s.triple.sxy, &s.triple.syy};
  for (Radargram* g : grams) {
    g->n_traces = size;
    g->n_time = size;
    g->dt_s = 1.0;
    g->dx_m = 1.0;
    g->values.resize(static_cast<size_t>(size) * size);
    for (double& v : g->values) v = rng.uniform01();
  }
  s.label.phi_deg = 30.0;
  s.label.theta_deg = 75.0;
  return s;
}

void add_end_to_end_check(SuiteBuilder& sb) {
  ModelConfig cfg;
  cfg.channels = 8;
  cfg.fc_width = 32;
  cfg.input_size = 8;
  MasnetModel<double> model = build_model<double>(cfg, /*seed=*/42);

  Rng rng(7);
  const PolarimetricSet s = tiny_sample(8, rng);
  const auto inputs = sample_inputs<double>(s, 8);

  auto loss = [&]() -> Tensor<double> {
    const auto [phi, theta] = forward_graph(model, inputs);
    Tensor<double> dphi =
        sub(phi, Tensor<double>::constant({1}, {s.label.phi_deg}));
    Tensor<double> dtheta =
        sub(theta, Tensor<double>::constant({1}, {s.label.theta_deg}));
    return add(mul(dphi, dphi), mul(dtheta, dtheta));
  };

  const std::vector<std::pair<std::string, size_t>> probes = {
      {"group0.lift.weight", 0},       {"group6.block.conv2.weight", 48},
      {"trunk.conv1.weight", 48},      {"trunk.conv2.bias", 0},
      {"fc.weight", 48},               {"head_phi.fc1.weight", 48},
      {"head_phi.out.weight", 32},     {"head_theta.out.bias", 0},
  };
  for (const auto& [name, max_coords] : probes) {
    const double err = grad_check(loss, model.param(name), 1e-5, max_coords,
                                  /*coord_seed=*/13);
    sb.results.push_back({"masnet-e2e/" + name, err, 1e-4, err <= 1e-4});
  }
}

void add_conv_reference_sweep(SuiteBuilder& sb) {
  Rng rng(55);
  double max_abs64 = 0.0;
  double max_rel32 = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const int cin = 1 + static_cast<int>(rng.index(4));
    const int cout = 1 + static_cast<int>(rng.index(4));
    const int h = 2 + static_cast<int>(rng.index(7));
    const int w = 2 + static_cast<int>(rng.index(7));
    const size_t plane = static_cast<size_t>(h) * w;

    const std::vector<double> in = random_values(cin * plane, rng);
    const std::vector<double> wt = random_values(static_cast<size_t>(cout) * cin * 9, rng);
    const std::vector<double> bs = random_values(cout, rng);
    const std::vector<double> ref = conv2d_reference(in, cin, h, w, wt, cout, bs);

    Tensor<double> out64 =
        conv2d(Tensor<double>::constant({cin, h, w}, in),
               Tensor<double>::constant({cout, cin, 3, 3}, wt),
               Tensor<double>::constant({cout}, bs));
    for (size_t i = 0; i < ref.size(); ++i) {
      max_abs64 = std::max(max_abs64, std::fabs(out64.values()[i] - ref[i]));
    }

    auto to_f = [](const std::vector<double>& v) {
      std::vector<float> f(v.size());
      for (size_t i = 0; i < v.size(); ++i) f[i] = static_cast<float>(v[i]);
      return f;
    };
    Tensor<float> out32 = conv2d(Tensor<float>::constant({cin, h, w}, to_f(in)),
                                 Tensor<float>::constant({cout, cin, 3, 3}, to_f(wt)),
                                 Tensor<float>::constant({cout}, to_f(bs)));
    for (size_t i = 0; i < ref.size(); ++i) {
      const double rel = std::fabs(out32.values()[i] - ref[i]) /
                         std::max(std::fabs(ref[i]), 1e-3);
      max_rel32 = std::max(max_rel32, rel);
    }
  }
  sb.record("conv2d-vs-reference-64bit", max_abs64, 1e-12);
  sb.record("conv2d-f32-vs-reference", max_rel32, 1e-4);
}

}  // namespace

std::vector<CheckResult> run_gradcheck_suite() {
  SuiteBuilder sb;
  add_op_checks(sb);
  add_conv_reference_sweep(sb);
  add_end_to_end_check(sb);
  return sb.results;
}

}  // namespace polarscan
