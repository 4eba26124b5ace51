#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "slicevol/autodiff/tensor.hpp"

namespace slicevol::ad {

// |a - b| / max(|a|, |b|, 1e-8)
double relative_error(double a, double b);

struct CoordinateCheck {
  std::size_t input = 0;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates_checked = 0;
  std::vector<CoordinateCheck> coordinates;  // filled when record_coordinates is set
};

struct GradCheckOptions {
  double step = 1e-5;
  // Probe at most this many coordinates per input (evenly strided); 0 = all.
  std::size_t max_coordinates_per_input = 0;
  bool record_coordinates = false;
};

using ScalarFunction = std::function<Tensor(std::span<const Tensor>)>;

// Compares reverse-mode gradients of a scalar function against central
// differences (f(x+h) - f(x-h)) / 2h, coordinate by coordinate.
GradCheckReport finite_diff_check(const ScalarFunction& f, std::span<const Tensor> inputs,
                                  const GradCheckOptions& options = {});

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                         double step);

}  // namespace slicevol::ad
