#include "pushnet/predictors/gradcheck_suite.hpp"

#include "pushnet/nn/kernels.hpp"
#include "pushnet/nn/ops.hpp"
#include "pushnet/predictors/model_ops.hpp"
#include "pushnet/predictors/predictor.hpp"
#include "pushnet/raster/raster.hpp"
#include "pushnet/sim/simulator.hpp"

#include <cmath>
#include <random>

namespace pushnet::predictors {

using nn::GradCheckReport;
using nn::Graph;
using nn::ParamStore;
using nn::Tensor;

namespace {

using Rng = std::mt19937_64;

Tensor<double> uniform(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor<double> t(std::move(shape));
  std::uniform_real_distribution<double> d(lo, hi);
  for (auto& v : t.values()) v = d(rng);
  return t;
}

// Magnitudes in [lo, hi] with random signs; keeps inputs away from kinks at 0.
Tensor<double> signed_away_from_zero(std::vector<int> shape, double lo, double hi, Rng& rng) {
  Tensor<double> t = uniform(std::move(shape), lo, hi, rng);
  std::bernoulli_distribution flip(0.5);
  for (auto& v : t.values())
    if (flip(rng)) v = -v;
  return t;
}

// Fixed, non-uniform weighting so every output entry reaches the scalar.
int weigh(Graph<double>& g, int y) {
  Tensor<double> w(g.value(y).shape());
  for (size_t i = 0; i < w.size(); ++i) w[i] = std::sin(1.3 * static_cast<double>(i) + 0.7) + 0.25;
  return nn::sum_all(g, nn::mul(g, y, g.constant(std::move(w))));
}

void add_param(ParamStore<double>& ps, const std::string& name, Tensor<double> value) {
  ps.add(name, value.shape(), true).value = std::move(value);
}

struct Case {
  std::string name;
  nn::GraphBuilder build;
  std::vector<Tensor<double>> inputs;
  ParamStore<double>* params = nullptr;
};

std::vector<const raster::DepthImage*> image_ptrs(const std::vector<sim::DatasetRecord>& recs) {
  std::vector<const raster::DepthImage*> out;
  for (const auto& r : recs) out.push_back(&r.depth);
  return out;
}

std::vector<sim::DatasetRecord> tiny_dataset(std::uint64_t seed, CameraMode mode) {
  sim::GenConfig g;
  g.camera.image_size = 32;
  g.camera.mode = mode;
  g.n_records = 4;
  g.augment_transforms_per_push = 1;
  g.no_contact_frac = 0.25;
  g.seed = seed;
  return sim::generate_dataset(g);
}

ArchConfig tiny_arch() {
  ArchConfig a;
  a.glimpse = 8;
  a.position_channels = {2, 3, 3, 2};
  a.glimpse_channels = {2, 3, 2};
  a.mlp_width = 8;
  a.mlp_layers = 2;
  return a;
}

// Random interior contact configurations: pushes into the object through a
// contact point 15..40 mm from the centre.
void contact_inputs(int B, Rng& rng, Tensor<double>& c_rel, Tensor<double>& n, Tensor<double>& s, Tensor<double>& u,
                    Tensor<double>& l) {
  std::uniform_real_distribution<double> ang(-kPi, kPi), rad(15.0, 40.0), off(-0.9, 0.9), mag(2.0, 10.0),
      sv(0.2, 1.0), lv(20.0, 50.0);
  c_rel = Tensor<double>({B, 2});
  n = Tensor<double>({B, 2});
  s = Tensor<double>({B, 1});
  u = Tensor<double>({B, 2});
  l = Tensor<double>({B, 1});
  for (int i = 0; i < B; ++i) {
    const double a = ang(rng);
    const double r = rad(rng);
    c_rel[2 * i] = r * std::cos(a);
    c_rel[2 * i + 1] = r * std::sin(a);
    const double na = a + kPi + off(rng) * 0.5;
    n[2 * i] = std::cos(na);
    n[2 * i + 1] = std::sin(na);
    const double ua = na + off(rng);
    const double m = mag(rng);
    u[2 * i] = m * std::cos(ua);
    u[2 * i + 1] = m * std::sin(ua);
    s[i] = sv(rng);
    l[i] = lv(rng);
  }
}

std::vector<Case> op_cases(Rng& rng, std::vector<std::unique_ptr<ParamStore<double>>>& stores) {
  std::vector<Case> cases;
  auto store = [&]() -> ParamStore<double>& {
    stores.push_back(std::make_unique<ParamStore<double>>());
    return *stores.back();
  };

  {
    auto& ps = store();
    add_param(ps, "W", uniform({5, 4}, -1, 1, rng));
    add_param(ps, "b", uniform({5}, -1, 1, rng));
    cases.push_back({"dense",
                     [&ps](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, nn::dense(g, in[0], g.param(ps.get("W")), g.param(ps.get("b"))));
                     },
                     {uniform({3, 4}, -1, 1, rng)}});
    cases.back().params = &ps;
  }
  {
    auto& ps = store();
    add_param(ps, "W", uniform({3, 2, 3, 3}, -1, 1, rng));
    add_param(ps, "b", uniform({3}, -1, 1, rng));
    cases.push_back({"conv2d k3 s2 p1",
                     [&ps](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, nn::conv2d(g, in[0], g.param(ps.get("W")), g.param(ps.get("b")), 2, 1));
                     },
                     {uniform({2, 2, 7, 7}, -1, 1, rng)}});
    cases.back().params = &ps;
  }
  {
    auto& ps = store();
    add_param(ps, "W", uniform({2, 2, 5, 5}, -1, 1, rng));
    add_param(ps, "b", uniform({2}, -1, 1, rng));
    cases.push_back({"conv2d k5 s1 p2",
                     [&ps](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, nn::conv2d(g, in[0], g.param(ps.get("W")), g.param(ps.get("b")), 1, 2));
                     },
                     {uniform({1, 2, 6, 5}, -1, 1, rng)}});
    cases.back().params = &ps;
  }
  {
    auto& ps = store();
    add_param(ps, "W", uniform({3, 2, 4, 4}, -1, 1, rng));
    add_param(ps, "b", uniform({2}, -1, 1, rng));
    cases.push_back({"conv_transpose2d k4 s2 p1",
                     [&ps](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g,
                                    nn::conv_transpose2d(g, in[0], g.param(ps.get("W")), g.param(ps.get("b")), 2, 1, 0));
                     },
                     {uniform({2, 3, 4, 4}, -1, 1, rng)}});
    cases.back().params = &ps;
  }
  cases.push_back({"maxpool2d k2",
                   [](Graph<double>& g, const std::vector<int>& in) { return weigh(g, nn::maxpool2d(g, in[0], 2)); },
                   {uniform({2, 2, 6, 7}, -1, 1, rng)}});
  cases.push_back({"relu", [](Graph<double>& g, const std::vector<int>& in) { return weigh(g, nn::relu(g, in[0])); },
                   {signed_away_from_zero({4, 5}, 0.05, 1, rng)}});
  cases.push_back({"sigmoid",
                   [](Graph<double>& g, const std::vector<int>& in) { return weigh(g, nn::sigmoid(g, in[0])); },
                   {uniform({4, 5}, -3, 3, rng)}});
  cases.push_back({"abs", [](Graph<double>& g, const std::vector<int>& in) { return weigh(g, nn::abs(g, in[0])); },
                   {signed_away_from_zero({4, 5}, 0.05, 1, rng)}});
  cases.push_back({"spatial_softmax",
                   [](Graph<double>& g, const std::vector<int>& in) { return weigh(g, nn::spatial_softmax(g, in[0])); },
                   {uniform({2, 1, 6, 5}, -2, 2, rng)}});
  cases.push_back({"row_norm",
                   [](Graph<double>& g, const std::vector<int>& in) { return weigh(g, nn::row_norm(g, in[0])); },
                   {signed_away_from_zero({4, 3}, 0.2, 1, rng)}});
  cases.push_back({"normalize_rows",
                   [](Graph<double>& g, const std::vector<int>& in) { return weigh(g, nn::normalize_rows(g, in[0])); },
                   {signed_away_from_zero({4, 3}, 0.2, 1, rng)}});
  cases.push_back({"elementwise chain",
                   [](Graph<double>& g, const std::vector<int>& in) {
                     const int a = nn::slice(g, in[0], 1, 3);
                     const int b = nn::mul(g, a, in[1]);
                     const int c = nn::sub(g, nn::add(g, b, nn::scale(g, a, 0.5)), in[1]);
                     const int d = nn::mul_rows(g, c, in[2]);
                     const int e = nn::concat(g, {d, in[0]});
                     return weigh(g, nn::reshape(g, e, {2, 2, 4}));
                   },
                   {uniform({2, 5}, -1, 1, rng), uniform({2, 3}, -1, 1, rng), uniform({2, 1}, -1, 1, rng)}});
  cases.push_back({"mean_all",
                   [](Graph<double>& g, const std::vector<int>& in) {
                     return nn::mean_all(g, nn::mul(g, in[0], in[0]));
                   },
                   {uniform({3, 4}, -1, 1, rng)}});
  {
    auto& ps = store();
    add_param(ps, "A", uniform({3, 4}, -1, 1, rng));
    add_param(ps, "B", uniform({5}, -1, 1, rng));
    cases.push_back({"l2_penalty",
                     [&ps](Graph<double>& g, const std::vector<int>&) {
                       return nn::l2_penalty(g, {g.param(ps.get("A")), g.param(ps.get("B"))}, 0.37);
                     },
                     {}});
    cases.back().params = &ps;
  }
  {
    Tensor<double> target({3, 2});
    for (size_t i = 0; i < target.size(); ++i) target[i] = static_cast<double>(i % 2);
    cases.push_back({"binary_cross_entropy",
                     [target](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, nn::binary_cross_entropy(g, in[0], g.constant(target)));
                     },
                     {uniform({3, 2}, 0.1, 0.9, rng)}});
  }
  {
    const Tensor<double> twist_label = uniform({4, 3}, -5, 5, rng);
    const Tensor<double> pos_label = uniform({4, 2}, -30, 30, rng);
    cases.push_back({"loss_2d",
                     [twist_label, pos_label](Graph<double>& g, const std::vector<int>& in) {
                       return loss_2d(g, in[0], in[1], g.constant(twist_label), g.constant(pos_label)).total;
                     },
                     {uniform({4, 3}, -5, 5, rng), uniform({4, 2}, -30, 30, rng)}});
    Tensor<double> s_label({4, 1});
    s_label[0] = 1, s_label[1] = 0, s_label[2] = 1, s_label[3] = 1;
    cases.push_back({"loss_viewpoint",
                     [twist_label, pos_label, s_label](Graph<double>& g, const std::vector<int>& in) {
                       return loss_viewpoint(g, in[0], in[1], in[2], g.constant(twist_label), g.constant(s_label),
                                             g.constant(pos_label), 10.0)
                           .total;
                     },
                     {uniform({4, 3}, -5, 5, rng), uniform({4, 1}, 0.1, 0.9, rng), uniform({4, 2}, -30, 30, rng)}});
  }
  {
    Tensor<double> c, n, s, u, l;
    contact_inputs(16, rng, c, n, s, u, l);
    const std::vector<double> mu(16, 0.25);
    cases.push_back({"pushmodel_op",
                     [mu](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, pushmodel_op(g, in[0], in[1], in[2], in[3], in[4], mu));
                     },
                     {c, n, s, u, l}});
    cases.push_back({"stage2_op",
                     [](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, stage2_op(g, in[0], in[1], in[2]));
                     },
                     {u, c, l}});
  }
  {
    const Camera top = raster::top_down_camera(32);
    const Camera pin = raster::pinhole_camera(32, Vec3(0.0, -250.0, 400.0));
    cases.push_back({"pixel_to_plane_op top-down",
                     [top](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, pixel_to_plane_op(g, in[0], top, 10.0));
                     },
                     {uniform({3, 2}, 4, 28, rng)}});
    cases.push_back({"pixel_to_plane_op pinhole",
                     [pin](Graph<double>& g, const std::vector<int>& in) {
                       return weigh(g, pixel_to_plane_op(g, in[0], pin, 10.0));
                     },
                     {uniform({3, 2}, 4, 28, rng)}});
  }
  return cases;
}

// dense with the weight gradient scaled by 1.01.
int mutant_dense(Graph<double>& g, int x, int W, int b) {
  const int y = nn::dense(g, g.stop_gradient(x), g.stop_gradient(W), g.stop_gradient(b));
  const Tensor<double> value = g.value(y);
  const int B = g.value(x).dim(0), in = g.value(x).dim(1), out = g.value(W).dim(0);
  return g.op(value, {x, W, b}, [x, W, b, B, in, out](Graph<double>& g, int self) {
    const auto& gy = g.grad(self);
    if (g.requires_grad(x))
      nn::kernels::gemm<double>(false, false, B, in, out, 1.0, gy.data(), g.value(W).data(), 1.0, g.grad(x).data());
    if (g.requires_grad(W))
      nn::kernels::gemm<double>(true, false, out, in, B, 1.01, gy.data(), g.value(x).data(), 1.0, g.grad(W).data());
    if (g.requires_grad(b))
      for (int n = 0; n < B; ++n)
        for (int o = 0; o < out; ++o) g.grad(b)[o] += gy[static_cast<size_t>(n) * out + o];
  });
}

}  // namespace

std::vector<GradCheckReport> gradcheck_suite(const SuiteOptions& options) {
  Rng rng(options.seed);
  std::vector<std::unique_ptr<ParamStore<double>>> stores;
  std::vector<GradCheckReport> reports;
  ParamStore<double> empty;
  for (const auto& c : op_cases(rng, stores))
    reports.push_back(nn::grad_check(c.name, c.build, c.params ? *c.params : empty, c.inputs, options.check));

  const auto records = tiny_dataset(options.seed, CameraMode::TopDown);
  {
    const auto images = image_ptrs(records);
    Tensor<double> px({4, 2});
    std::uniform_real_distribution<double> d(6.3, 25.7);
    for (auto& v : px.values()) v = d(rng);
    reports.push_back(nn::grad_check(
        "unproject_op",
        [images](Graph<double>& g, const std::vector<int>& in) { return weigh(g, unproject_op(g, in[0], images)); },
        empty, {px}, options.check));
  }
  if (!options.full_models) return reports;

  std::vector<const sim::DatasetRecord*> ptrs;
  for (const auto& r : records) ptrs.push_back(&r);
  const InputSpec spec = make_input_spec(records.front().depth.camera, 32, 32);
  for (Variant v : all_variants()) {
    // The error family's total loss deliberately differs from its numerical
    // derivative (stop-gradient); its heads are covered by the hybrid case.
    if (!is_learnable(v) || is_error_family(v)) continue;
    for (LossKind loss : {LossKind::TopDown, LossKind::Viewpoint}) {
      if (loss == LossKind::Viewpoint && v != Variant::Hybrid) continue;
      ArchConfig arch = tiny_arch();
      arch.loss = loss;
      const Model model(v, arch, 32);
      ParamStore<float> init;
      model.init(init, options.seed);
      auto ps = std::make_unique<ParamStore<double>>(init.cast<double>());
      // Zero biases put flat background pixels exactly on ReLU kinks.
      std::uniform_real_distribution<double> jitter(-0.05, 0.05);
      for (size_t k = 0; k < ps->size(); ++k)
        for (auto& x : (*ps)[k].value.values()) x += jitter(rng);
      const Batch batch = make_batch(ptrs, spec, arch, has_perception(v));
      ParamStore<double>* p = ps.get();
      stores.push_back(std::move(ps));
      reports.push_back(nn::grad_check(
          "model " + to_string(v) + " " + to_string(loss),
          [&model, p, &batch](Graph<double>& g, const std::vector<int>&) {
            const Outputs out = model.forward(g, *p, batch);
            return model.loss(g, out, batch).total;
          },
          *p, {}, options.model_check));
    }
  }
  return reports;
}

GradCheckReport gradcheck_mutant(const SuiteOptions& options) {
  Rng rng(options.seed);
  ParamStore<double> ps;
  add_param(ps, "W", uniform({5, 4}, -1, 1, rng));
  add_param(ps, "b", uniform({5}, -1, 1, rng));
  return nn::grad_check(
      "mutant dense",
      [&ps](Graph<double>& g, const std::vector<int>& in) {
        return weigh(g, mutant_dense(g, in[0], g.param(ps.get("W")), g.param(ps.get("b"))));
      },
      ps, {uniform({3, 4}, -1, 1, rng)}, options.check);
}

}  // namespace pushnet::predictors
