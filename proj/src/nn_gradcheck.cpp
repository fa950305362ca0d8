#include "pushnet/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace pushnet::nn {

double relative_error(double analytic, double numeric, double abs_floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double evaluate(const GraphBuilder& build, const std::vector<Tensor<double>>& inputs) {
  Graph<double> g;
  std::vector<int> vars;
  for (const auto& t : inputs) vars.push_back(g.constant(t));
  const int out = build(g, vars);
  if (g.value(out).size() != 1) fail(ErrorKind::InvalidArgument, "grad_check: output must be scalar");
  return g.value(out)[0];
}

// Indices to probe: all of them for small tensors, an even stride otherwise.
std::vector<size_t> probe_indices(size_t n, size_t max_count) {
  std::vector<size_t> idx;
  if (n <= max_count) {
    for (size_t i = 0; i < n; ++i) idx.push_back(i);
  } else {
    for (size_t k = 0; k < max_count; ++k) idx.push_back(k * n / max_count);
  }
  return idx;
}

template <typename Probe>
GradCheckEntry check_tensor(const std::string& label, std::vector<double>& values, const std::vector<double>& analytic,
                            const GradCheckOptions& opt, Probe&& probe) {
  GradCheckEntry e;
  e.tensor = label;
  for (size_t i : probe_indices(values.size(), opt.max_per_tensor)) {
    const double x0 = values[i];
    const double h = opt.step * std::max(1.0, std::abs(x0));
    values[i] = x0 + h;
    const double fp = probe();
    values[i] = x0 - h;
    const double fm = probe();
    values[i] = x0;
    const double numeric = (fp - fm) / (2.0 * h);
    const double err = relative_error(analytic[i], numeric, opt.abs_floor);
    ++e.checked;
    if (err >= e.rel_error) {
      e.rel_error = err;
      e.index = i;
      e.analytic = analytic[i];
      e.numeric = numeric;
    }
  }
  return e;
}

}  // namespace

GradCheckReport grad_check(const std::string& name, const GraphBuilder& build, ParamStore<double>& params,
                           std::vector<Tensor<double>> inputs, const GradCheckOptions& options) {
  params.zero_grad();
  std::vector<std::vector<double>> input_grads;
  {
    Graph<double> g;
    std::vector<int> vars;
    for (const auto& t : inputs) vars.push_back(g.variable(t));
    const int out = build(g, vars);
    g.backward(out);
    for (int v : vars) input_grads.push_back(g.has_grad(v) ? g.grad(v).values() : std::vector<double>(g.value(v).size()));
  }

  GradCheckReport report;
  report.name = name;
  auto probe = [&] { return evaluate(build, inputs); };
  for (size_t k = 0; k < params.size(); ++k) {
    Parameter<double>& p = params[k];
    const std::vector<double> analytic = p.grad.values();
    report.tensors.push_back(check_tensor("param:" + p.name, p.value.values(), analytic, options, probe));
  }
  for (size_t k = 0; k < inputs.size(); ++k)
    report.tensors.push_back(
        check_tensor("input:" + std::to_string(k), inputs[k].values(), input_grads[k], options, probe));

  for (const auto& e : report.tensors) report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
  report.ok = report.max_rel_error <= options.rel_tol;
  return report;
}

}  // namespace pushnet::nn
