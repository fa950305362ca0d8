#pragma once

#include "pushnet/nn/graph.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pushnet::nn {

struct GradCheckOptions {
  double step = 1e-6;         // relative to max(1, |x|)
  double rel_tol = 1e-4;
  double abs_floor = 1e-7;    // denominators below this count as absolute error
  size_t max_per_tensor = 64; // entries checked per tensor (strided sample)
};

struct GradCheckEntry {
  std::string tensor;    // "param:<name>" or "input:<k>"
  size_t index = 0;      // worst entry
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  size_t checked = 0;
};

struct GradCheckReport {
  std::string name;
  std::vector<GradCheckEntry> tensors;  // one per checked tensor, worst entry
  double max_rel_error = 0.0;
  bool ok = true;
};

/// Builds the graph for given input variables and returns the scalar output.
/// Parameters enter through g.param(params.get(...)).
using GraphBuilder = std::function<int(Graph<double>& g, const std::vector<int>& inputs)>;

/// Central-difference check of d out / d x for every parameter in `params`
/// and every input tensor.
GradCheckReport grad_check(const std::string& name, const GraphBuilder& build, ParamStore<double>& params,
                           std::vector<Tensor<double>> inputs, const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric, double abs_floor);

}  // namespace pushnet::nn
