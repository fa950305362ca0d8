#include "pushnet/core/error.hpp"
#include "pushnet/nn/gradcheck.hpp"
#include "pushnet/nn/kernels.hpp"
#include "pushnet/nn/ops.hpp"
#include "pushnet/nn/optim.hpp"
#include "pushnet/predictors/gradcheck_suite.hpp"

#include "util.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>

using namespace pushnet;
using namespace pushnet::nn;

namespace {

std::vector<double> random_values(size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

Tensor<double> random_tensor(std::vector<int> shape, std::mt19937_64& rng) {
  const size_t n = shape_size(shape);
  return Tensor<double>(std::move(shape), random_values(n, rng));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Parameter<double>& add(ParamStore<double>& ps, const std::string& name, Tensor<double> v) {
  auto& p = ps.add(name, v.shape(), true);
  p.value = std::move(v);
  return p;
}

}  // namespace

TEST_CASE("gemm kernels match the reference for every transpose combination") {
  std::mt19937_64 rng(1);
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      const int M = 70, N = 33, K = 21;
      const auto A = random_values(static_cast<size_t>(M) * K, rng);
      const auto B = random_values(static_cast<size_t>(K) * N, rng);
      auto C0 = random_values(static_cast<size_t>(M) * N, rng);
      auto C1 = C0;
      kernels::gemm(ta, tb, M, N, K, 0.7, A.data(), B.data(), 0.3, C0.data());
      reference::gemm(ta, tb, M, N, K, 0.7, A.data(), B.data(), 0.3, C1.data());
      CHECK(max_abs_diff(C0, C1) < 1e-12);
    }
}

TEST_CASE("conv2d kernels match the reference") {
  std::mt19937_64 rng(2);
  for (auto [stride, pad, k] : {std::tuple{1, 1, 3}, std::tuple{2, 1, 3}, std::tuple{1, 0, 1}, std::tuple{2, 2, 5}}) {
    ConvGeometry g{3, 9, 11, 4, k, stride, pad};
    const int B = 3;
    const auto x = random_values(static_cast<size_t>(B) * 3 * 9 * 11, rng);
    const auto w = random_values(static_cast<size_t>(4) * g.patch(), rng);
    const auto b = random_values(4, rng);
    const size_t ny = static_cast<size_t>(B) * 4 * g.out_height() * g.out_width();
    std::vector<double> y0(ny), y1(ny), cols(static_cast<size_t>(B) * g.patch() * g.out_height() * g.out_width());
    kernels::conv2d_forward(x.data(), w.data(), b.data(), B, g, y0.data(), cols.data());
    reference::conv2d_forward(x.data(), w.data(), b.data(), B, g, y1.data());
    CHECK(max_abs_diff(y0, y1) < 1e-12);

    const auto dy = random_values(ny, rng);
    std::vector<double> dx0(x.size()), dx1(x.size()), dw0(w.size()), dw1(w.size()), db0(4), db1(4);
    kernels::conv2d_backward(dy.data(), w.data(), cols.data(), B, g, dx0.data(), dw0.data(), db0.data());
    reference::conv2d_backward(x.data(), dy.data(), w.data(), B, g, dx1.data(), dw1.data(), db1.data());
    CHECK(max_abs_diff(dx0, dx1) < 1e-12);
    CHECK(max_abs_diff(dw0, dw1) < 1e-12);
    CHECK(max_abs_diff(db0, db1) < 1e-12);
  }
}

TEST_CASE("dense") {
  std::mt19937_64 rng(3);
  ParamStore<double> ps;
  Tensor<double> I({4, 4});
  for (int i = 0; i < 4; ++i) I[i * 4 + i] = 1.0;
  add(ps, "I", I);
  add(ps, "zero", Tensor<double>({4}));
  Graph<double> g;
  const auto x = random_tensor({5, 4}, rng);
  const int y = dense(g, g.constant(x), g.param(ps.get("I")), g.param(ps.get("zero")));
  CHECK(g.value(y).values() == x.values());

  // a batch equals the single-row passes stacked
  add(ps, "W", random_tensor({3, 4}, rng));
  add(ps, "b", random_tensor({3}, rng));
  const auto X = random_tensor({32, 4}, rng);
  Graph<double> gb;
  const auto& batch = gb.value(dense(gb, gb.constant(X), gb.param(ps.get("W")), gb.param(ps.get("b"))));
  for (int r = 0; r < 32; ++r) {
    Graph<double> g1;
    Tensor<double> row({1, 4}, std::vector<double>(X.values().begin() + r * 4, X.values().begin() + r * 4 + 4));
    const auto& single = g1.value(dense(g1, g1.constant(row), g1.param(ps.get("W")), g1.param(ps.get("b"))));
    for (int c = 0; c < 3; ++c) CHECK(std::abs(single[c] - batch[r * 3 + c]) < 1e-6);
  }

  Graph<double> bad;
  CHECK_THROWS_AS(dense(bad, bad.constant(random_tensor({2, 5}, rng)), bad.param(ps.get("W")), bad.param(ps.get("b"))),
                  Error);
}

TEST_CASE("1x1 convolution is a per-pixel dense layer") {
  std::mt19937_64 rng(4);
  ParamStore<double> ps;
  add(ps, "W", random_tensor({2, 3, 1, 1}, rng));
  add(ps, "b", random_tensor({2}, rng));
  const auto x = random_tensor({1, 3, 4, 5}, rng);
  Graph<double> g;
  const auto& y = g.value(conv2d(g, g.constant(x), g.param(ps.get("W")), g.param(ps.get("b")), 1, 0));
  REQUIRE(y.shape() == std::vector<int>{1, 2, 4, 5});
  const auto& W = ps.get("W").value;
  const auto& b = ps.get("b").value;
  for (int o = 0; o < 2; ++o)
    for (int p = 0; p < 20; ++p) {
      double want = b[o];
      for (int c = 0; c < 3; ++c) want += W[o * 3 + c] * x[c * 20 + p];
      CHECK(std::abs(y[o * 20 + p] - want) < 1e-12);
    }
}

TEST_CASE("maxpool of a constant image is constant") {
  Graph<double> g;
  const int y = maxpool2d(g, g.constant(Tensor<double>({2, 3, 6, 7}, 1.5)), 2);
  REQUIRE(g.value(y).shape() == std::vector<int>{2, 3, 3, 3});
  for (double v : g.value(y).values()) CHECK(v == 1.5);
}

TEST_CASE("conv_transpose2d is the adjoint of conv2d") {
  std::mt19937_64 rng(5);
  ParamStore<double> ps;
  add(ps, "W", random_tensor({3, 2, 3, 3}, rng));  // conv: 2 -> 3 channels; transpose: 3 -> 2
  add(ps, "b3", Tensor<double>({3}));
  add(ps, "b2", Tensor<double>({2}));
  const auto x = random_tensor({1, 2, 8, 8}, rng);
  Graph<double> g;
  const Tensor<double> cx = g.value(conv2d(g, g.constant(x), g.param(ps.get("W")), g.param(ps.get("b3")), 2, 1));
  const auto y = random_tensor(cx.shape(), rng);
  const Tensor<double> ty = g.value(conv_transpose2d(g, g.constant(y), g.param(ps.get("W")), g.param(ps.get("b2")), 2, 1, 1));
  REQUIRE(ty.shape() == x.shape());
  double lhs = 0, rhs = 0;
  for (size_t i = 0; i < y.size(); ++i) lhs += cx[i] * y[i];
  for (size_t i = 0; i < x.size(); ++i) rhs += x[i] * ty[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("spatial_softmax") {
  Graph<double> g;
  const int u = spatial_softmax(g, g.constant(Tensor<double>({1, 1, 6, 9})));
  CHECK(g.value(u)[0] == doctest::Approx(4.0));
  CHECK(g.value(u)[1] == doctest::Approx(2.5));

  Tensor<double> spike({1, 1, 6, 9});
  spike[3 * 9 + 7] = 1000.0;
  const int s = spatial_softmax(g, g.constant(spike));
  CHECK(std::abs(g.value(s)[0] - 7.0) < 1e-3);
  CHECK(std::abs(g.value(s)[1] - 3.0) < 1e-3);

  std::mt19937_64 rng(6);
  for (int i = 0; i < 50; ++i) {
    Tensor<double> t({2, 1, 5, 7}, random_values(70, rng, -30, 30));
    const auto& r = g.value(spatial_softmax(g, g.constant(t)));
    for (int b = 0; b < 2; ++b) {
      CHECK(r[2 * b] >= 0.0);
      CHECK(r[2 * b] <= 6.0);
      CHECK(r[2 * b + 1] >= 0.0);
      CHECK(r[2 * b + 1] <= 4.0);
    }
  }
}

TEST_CASE("activations") {
  Graph<double> g;
  Tensor<double> x({1, 3}, std::vector<double>{-2.0, 0.0, 3.0});
  const auto& r = g.value(relu(g, g.constant(x)));
  CHECK(r.values() == std::vector<double>{0.0, 0.0, 3.0});
  const auto& s = g.value(sigmoid(g, g.constant(x)));
  CHECK(s[1] == 0.5);
  CHECK(s[2] == doctest::Approx(1.0 / (1.0 + std::exp(-3.0))));
  const auto& b = g.value(binary_cross_entropy(g, g.constant(Tensor<double>({1, 2}, std::vector<double>{1.0, 0.0})),
                                               g.constant(Tensor<double>({1, 2}, std::vector<double>{1.0, 0.0}))));
  CHECK(b[0] < 1e-6);
  CHECK(b[1] < 1e-6);
}

TEST_CASE("stop_gradient blocks gradients upstream") {
  std::mt19937_64 rng(7);
  ParamStore<double> ps;
  add(ps, "W", random_tensor({3, 4}, rng));
  add(ps, "b", random_tensor({3}, rng));
  add(ps, "V", random_tensor({2, 3}, rng));
  add(ps, "c", random_tensor({2}, rng));
  const auto x = random_tensor({5, 4}, rng);

  auto run = [&](bool with_head, double head_scale) {
    ps.zero_grad();
    Graph<double> g;
    const int h = dense(g, g.constant(x), g.param(ps.get("W")), g.param(ps.get("b")));
    int loss = sum_all(g, mul(g, h, h));
    if (with_head) {
      const int e = dense(g, g.stop_gradient(h), g.param(ps.get("V")), g.param(ps.get("c")));
      loss = add(g, loss, scale(g, sum_all(g, mul(g, e, e)), head_scale));
    }
    g.backward(loss);
    return std::pair{ps.get("W").grad.values(), ps.get("V").grad.values()};
  };
  const auto [w_plain, v_plain] = run(false, 1.0);
  const auto [w_head, v_head] = run(true, 1.0);
  const auto [w_big, v_big] = run(true, 50.0);
  CHECK(w_plain == w_head);
  CHECK(w_plain == w_big);
  CHECK(v_head != v_plain);
}

TEST_CASE("grad_check on a linear graph is exact") {
  std::mt19937_64 rng(8);
  ParamStore<double> ps;
  add(ps, "W", random_tensor({3, 4}, rng));
  add(ps, "b", random_tensor({3}, rng));
  const auto rep = grad_check(
      "linear",
      [&](Graph<double>& g, const std::vector<int>& in) {
        return sum_all(g, dense(g, in[0], g.param(ps.get("W")), g.param(ps.get("b"))));
      },
      ps, {random_tensor({2, 4}, rng)});
  CHECK(rep.ok);
  CHECK(rep.max_rel_error < 1e-8);
  CHECK(rep.tensors.size() == 3);
}

TEST_CASE("gradient check suite") {
  const auto reports = predictors::gradcheck_suite();
  CHECK(reports.size() > 20);
  for (const auto& r : reports) {
    INFO(r.name << " worst " << r.max_rel_error);
    CHECK(r.ok);
  }
  const auto mutant = predictors::gradcheck_mutant();
  CHECK_FALSE(mutant.ok);
}

TEST_CASE("adam") {
  std::mt19937_64 rng(9);
  ParamStore<float> ps;
  auto& p = ps.add("w", {4}, true);
  for (auto& v : p.value.values()) v = 0.5f;

  SUBCASE("zero gradients leave parameters unchanged") {
    AdamState st = make_adam(ps, 1e-3);
    for (int i = 0; i < 5; ++i) adam_step(ps, st);
    for (float v : p.value.values()) CHECK(v == 0.5f);
    CHECK(st.step == 5);
  }

  SUBCASE("first step moves by about lr whatever the gradient scale") {
    AdamState st = make_adam(ps, 1e-3);
    p.grad.values() = {1e-3f, 1.0f, -50.0f, 1e4f};
    adam_step(ps, st);
    CHECK(0.5f - p.value[0] == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(0.5f - p.value[1] == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(p.value[2] - 0.5f == doctest::Approx(1e-3).epsilon(1e-3));
    CHECK(0.5f - p.value[3] == doctest::Approx(1e-3).epsilon(1e-3));
  }

  SUBCASE("replay is bit-identical") {
    auto run = [&]() {
      ParamStore<float> q;
      auto& w = q.add("w", {16}, true);
      std::mt19937_64 r(11);
      init_fan_in(w, 16, r);
      AdamState st = make_adam(q, 1e-2);
      for (int i = 0; i < 50; ++i) {
        for (size_t k = 0; k < 16; ++k) w.grad[k] = w.value[k] * float(k % 3) - 0.1f;
        adam_step(q, st);
      }
      return w.value.values();
    };
    CHECK(run() == run());
  }
}

TEST_CASE("checkpoint round trip") {
  testutil::TempDir dir("ckpt");
  std::mt19937_64 rng(12);
  ParamStore<float> ps;
  init_fan_in(ps.add("a.W", {3, 5}, true), 5, rng);
  init_fan_in(ps.add("a.b", {3}, false), 5, rng);
  AdamState st = make_adam(ps, 1e-3);
  for (auto& g : ps[0].grad.values()) g = 0.25f;
  adam_step(ps, st);
  const nlohmann::json cfg = {{"model", "x"}, {"n", 3}};
  save_checkpoint(dir.str("m.ckpt"), ps, &st, cfg);

  ParamStore<float> back;
  back.add("a.W", {3, 5}, true);
  back.add("a.b", {3}, false);
  const auto loaded = load_checkpoint(dir.str("m.ckpt"), back);
  CHECK(loaded.config == cfg);
  CHECK(read_checkpoint_config(dir.str("m.ckpt")) == cfg);
  REQUIRE(loaded.has_adam);
  CHECK(loaded.adam.step == 1);
  CHECK(loaded.adam.m == st.m);
  CHECK(loaded.adam.v == st.v);
  for (size_t i = 0; i < ps.size(); ++i) CHECK(back[i].value.values() == ps[i].value.values());

  save_checkpoint(dir.str("again.ckpt"), back, &loaded.adam, cfg);
  CHECK(testutil::read_file(dir.str("m.ckpt")) == testutil::read_file(dir.str("again.ckpt")));

  ParamStore<float> wrong;
  wrong.add("a.W", {5, 3}, true);
  wrong.add("a.b", {3}, false);
  CHECK_THROWS_AS(load_checkpoint(dir.str("m.ckpt"), wrong), Error);

  {
    std::ofstream junk(dir.str("junk.ckpt"), std::ios::binary);
    junk << "not a checkpoint";
  }
  ParamStore<float> any;
  any.add("a.W", {3, 5}, true);
  try {
    load_checkpoint(dir.str("junk.ckpt"), any);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
}
