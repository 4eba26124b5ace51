#include "slicevol/autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "slicevol/errors.hpp"

namespace slicevol::ad {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckReport finite_diff_check(const ScalarFunction& f, std::span<const Tensor> inputs,
                                  const GradCheckOptions& options) {
  if (!(options.step > 0.0)) throw ParameterError("finite-difference step must be positive");

  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const Tensor& t : inputs) leaves.push_back(t.as_leaf(true));
  const Gradients grads = backward(f(leaves));

  // Perturbed evaluations run without recording a graph.
  std::vector<Tensor> probe;
  probe.reserve(inputs.size());
  for (const Tensor& t : inputs) probe.push_back(t.detach());

  GradCheckReport report;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    const std::vector<double> analytic = grads.of(leaves[k]);
    const std::size_t n = analytic.size();
    std::size_t stride = 1;
    if (options.max_coordinates_per_input != 0 && n > options.max_coordinates_per_input) {
      stride = (n + options.max_coordinates_per_input - 1) / options.max_coordinates_per_input;
    }
    const auto base = inputs[k].data();
    std::vector<double> values(base.begin(), base.end());
    for (std::size_t i = 0; i < n; i += stride) {
      const double x0 = values[i];
      values[i] = x0 + options.step;
      probe[k] = Tensor(inputs[k].shape(), values);
      const double f_plus = f(probe).item();
      values[i] = x0 - options.step;
      probe[k] = Tensor(inputs[k].shape(), values);
      const double f_minus = f(probe).item();
      values[i] = x0;

      const double numeric = (f_plus - f_minus) / (2.0 * options.step);
      const double err = relative_error(analytic[i], numeric);
      ++report.coordinates_checked;
      if (options.record_coordinates) report.coordinates.push_back({k, i, analytic[i], numeric});
      if (err > report.max_relative_error || report.coordinates_checked == 1) {
        report.max_relative_error = err;
        report.worst_input = k;
        report.worst_index = i;
        report.analytic = analytic[i];
        report.numeric = numeric;
      }
    }
    probe[k] = inputs[k].detach();
  }
  return report;
}

double finite_diff_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                         double step) {
  const Tensor inputs[] = {x};
  GradCheckOptions options;
  options.step = step;
  return finite_diff_check([&f](std::span<const Tensor> xs) { return f(xs[0]); }, inputs, options)
      .max_relative_error;
}

}  // namespace slicevol::ad
