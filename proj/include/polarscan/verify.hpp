#pragma once

#include <functional>
#include <string>
#include <vector>

#include "polarscan/tensor.hpp"

namespace polarscan {

// Numerical verification surface: central-difference gradient checking and
// a plain quadruple-loop convolution reference. Everything here is kept
// independent of the fast execution paths it is used to check.

// Naive 3x3 same-padding cross-correlation, summation order (ci, ky, kx).
std::vector<double> conv2d_reference(const std::vector<double>& input, int cin, int h,
                                     int w, const std::vector<double>& weight, int cout,
                                     const std::vector<double>& bias);

// Compares the analytic gradient of f w.r.t. `probe` against central finite
// differences, coordinate by coordinate. Returns the max relative error with
// denominator max(|analytic|, |numeric|, 1e-8). When max_coords > 0 and the
// probe is larger, a seeded subset of coordinates is checked instead.
double grad_check(const std::function<Tensor<double>()>& f, Tensor<double>& probe,
                  double eps, size_t max_coords = 0, uint64_t coord_seed = 0);

struct CheckResult {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

// Gradient checks for every differentiable op plus the reduced end-to-end
// model loss, and the conv-vs-reference sweep. Used by tests and the
// `gradcheck` subcommand.
std::vector<CheckResult> run_gradcheck_suite();

}  // namespace polarscan
