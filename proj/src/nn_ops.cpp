#include "pushnet/nn/ops.hpp"

#include "pushnet/nn/kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace pushnet::nn {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::InvalidArgument, what);
}

template <typename T>
void require_same_shape(const Graph<T>& g, int a, int b, const char* op) {
  require(g.value(a).shape() == g.value(b).shape(),
          std::string(op) + ": shape mismatch " + shape_string(g.value(a).shape()) + " vs " +
              shape_string(g.value(b).shape()));
}

template <typename T>
void accumulate(Graph<T>& g, int v, const T* src) {
  if (!g.requires_grad(v)) return;
  auto& dst = g.grad(v).values();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// Elementwise unary op with derivative computed from input and output values.
template <typename T, typename F, typename D>
int unary(Graph<T>& g, int x, F f, D df) {
  const Tensor<T>& xv = g.value(x);
  Tensor<T> y(xv.shape());
  for (size_t i = 0; i < y.size(); ++i) y[i] = f(xv[i]);
  return g.op(std::move(y), {x}, [x, df](Graph<T>& g, int self) {
    const Tensor<T>& xv = g.value(x);
    const Tensor<T>& yv = g.value(self);
    const Tensor<T>& gy = g.grad(self);
    auto& gx = g.grad(x);
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * df(xv[i], yv[i]);
  });
}

}  // namespace

template <typename T>
int dense(Graph<T>& g, int x, int W, int b) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& wv = g.value(W);
  const Tensor<T>& bv = g.value(b);
  require(xv.rank() == 2 && wv.rank() == 2 && bv.rank() == 1, "dense: expected x[B,in], W[out,in], b[out]");
  const int B = xv.dim(0), in = xv.dim(1), out = wv.dim(0);
  require(wv.dim(1) == in && bv.dim(0) == out,
          "dense: shape mismatch x" + shape_string(xv.shape()) + " W" + shape_string(wv.shape()));
  Tensor<T> y({B, out});
  for (int n = 0; n < B; ++n) std::copy(bv.data(), bv.data() + out, y.data() + static_cast<size_t>(n) * out);
  kernels::gemm<T>(false, true, B, out, in, T(1), xv.data(), wv.data(), T(1), y.data());
  return g.op(std::move(y), {x, W, b}, [x, W, b, B, in, out](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    if (g.requires_grad(x))
      kernels::gemm<T>(false, false, B, in, out, T(1), gy.data(), g.value(W).data(), T(1), g.grad(x).data());
    if (g.requires_grad(W))
      kernels::gemm<T>(true, false, out, in, B, T(1), gy.data(), g.value(x).data(), T(1), g.grad(W).data());
    if (g.requires_grad(b)) {
      auto& gb = g.grad(b);
      for (int n = 0; n < B; ++n)
        for (int o = 0; o < out; ++o) gb[o] += gy[static_cast<size_t>(n) * out + o];
    }
  });
}

template <typename T>
int conv2d(Graph<T>& g, int x, int W, int b, int stride, int pad) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& wv = g.value(W);
  require(xv.rank() == 4 && wv.rank() == 4, "conv2d: expected 4-d input and weight");
  require(wv.dim(1) == xv.dim(1) && wv.dim(2) == wv.dim(3) && g.value(b).size() == size_t(wv.dim(0)),
          "conv2d: shape mismatch x" + shape_string(xv.shape()) + " W" + shape_string(wv.shape()));
  require(stride >= 1 && pad >= 0, "conv2d: invalid stride or padding");
  ConvGeometry geo{xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(0), wv.dim(2), stride, pad};
  require(geo.out_height() >= 1 && geo.out_width() >= 1, "conv2d: input smaller than kernel");
  const int B = xv.dim(0);
  auto cols = std::make_shared<std::vector<T>>(static_cast<size_t>(B) * geo.patch() * geo.out_height() *
                                               geo.out_width());
  Tensor<T> y({B, geo.out_channels, geo.out_height(), geo.out_width()});
  kernels::conv2d_forward(xv.data(), wv.data(), g.value(b).data(), B, geo, y.data(), cols->data());
  return g.op(std::move(y), {x, W, b}, [x, W, b, geo, B, cols](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    std::vector<T> dx(g.requires_grad(x) ? g.value(x).size() : 0);
    std::vector<T> dw(g.value(W).size()), db(g.value(b).size());
    kernels::conv2d_backward(gy.data(), g.value(W).data(), cols->data(), B, geo,
                             dx.empty() ? nullptr : dx.data(), dw.data(), db.data());
    if (!dx.empty()) accumulate(g, x, dx.data());
    accumulate(g, W, dw.data());
    accumulate(g, b, db.data());
  });
}

template <typename T>
int conv_transpose2d(Graph<T>& g, int x, int W, int b, int stride, int pad, int output_pad) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& wv = g.value(W);
  require(xv.rank() == 4 && wv.rank() == 4, "conv_transpose2d: expected 4-d input and weight");
  require(wv.dim(0) == xv.dim(1) && wv.dim(2) == wv.dim(3) && g.value(b).size() == size_t(wv.dim(1)),
          "conv_transpose2d: shape mismatch x" + shape_string(xv.shape()) + " W" + shape_string(wv.shape()));
  const int B = xv.dim(0), Cin = xv.dim(1), Hin = xv.dim(2), Win = xv.dim(3);
  const int Cout = wv.dim(1), k = wv.dim(2);
  const int Hout = (Hin - 1) * stride - 2 * pad + k + output_pad;
  const int Wout = (Win - 1) * stride - 2 * pad + k + output_pad;
  // The forward conv geometry whose adjoint this op is.
  ConvGeometry geo{Cout, Hout, Wout, Cin, k, stride, pad};
  require(Hout >= 1 && geo.out_height() == Hin && geo.out_width() == Win,
          "conv_transpose2d: inconsistent output padding");
  const int HWi = Hin * Win, P = geo.patch();
  const size_t out_size = static_cast<size_t>(Cout) * Hout * Wout;

  Tensor<T> y({B, Cout, Hout, Wout});
  const T* bias = g.value(b).data();
#pragma omp parallel
  {
    std::vector<T> cols(static_cast<size_t>(P) * HWi);
#pragma omp for schedule(static)
    for (int n = 0; n < B; ++n) {
      Eigen::Map<const MatR<T>> wm(wv.data(), Cin, P);
      Eigen::Map<const MatR<T>> xm(xv.data() + static_cast<size_t>(n) * Cin * HWi, Cin, HWi);
      Eigen::Map<MatR<T>> cm(cols.data(), P, HWi);
      cm.noalias() = wm.transpose() * xm;
      T* yn = y.data() + n * out_size;
      for (int c = 0; c < Cout; ++c) std::fill(yn + c * Hout * Wout, yn + (c + 1) * Hout * Wout, bias[c]);
      kernels::col2im(cols.data(), geo, yn);
    }
  }

  return g.op(std::move(y), {x, W, b}, [x, W, b, geo, B, Cin, HWi, P, out_size](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    const Tensor<T>& wv = g.value(W);
    const Tensor<T>& xv = g.value(x);
    const bool need_dx = g.requires_grad(x);
    const size_t w_size = wv.size();
    std::vector<T> dx(need_dx ? xv.size() : 0);
    std::vector<T> dw_per(static_cast<size_t>(B) * w_size);
#pragma omp parallel
    {
      std::vector<T> dcols(static_cast<size_t>(P) * HWi);
#pragma omp for schedule(static)
      for (int n = 0; n < B; ++n) {
        kernels::im2col(gy.data() + n * out_size, geo, dcols.data());
        Eigen::Map<const MatR<T>> dcm(dcols.data(), P, HWi);
        Eigen::Map<const MatR<T>> xm(xv.data() + static_cast<size_t>(n) * Cin * HWi, Cin, HWi);
        Eigen::Map<MatR<T>> dwm(dw_per.data() + n * w_size, Cin, P);
        dwm.noalias() = xm * dcm.transpose();
        if (need_dx) {
          Eigen::Map<const MatR<T>> wm(wv.data(), Cin, P);
          Eigen::Map<MatR<T>> dxm(dx.data() + static_cast<size_t>(n) * Cin * HWi, Cin, HWi);
          dxm.noalias() = wm * dcm;
        }
      }
    }
    std::vector<T> dw(w_size, T(0));
    for (int n = 0; n < B; ++n)
      for (size_t i = 0; i < w_size; ++i) dw[i] += dw_per[n * w_size + i];
    std::vector<T> db(geo.channels, T(0));
    const int HWo = geo.height * geo.width;
    for (int n = 0; n < B; ++n)
      for (int c = 0; c < geo.channels; ++c)
        for (int i = 0; i < HWo; ++i) db[c] += gy[n * out_size + static_cast<size_t>(c) * HWo + i];
    if (need_dx) accumulate(g, x, dx.data());
    accumulate(g, W, dw.data());
    accumulate(g, b, db.data());
  });
}

template <typename T>
int maxpool2d(Graph<T>& g, int x, int k) {
  const Tensor<T>& xv = g.value(x);
  require(xv.rank() == 4 && k >= 1, "maxpool2d: expected 4-d input");
  const int B = xv.dim(0), C = xv.dim(1), H = xv.dim(2), W = xv.dim(3);
  const int Ho = H / k, Wo = W / k;
  require(Ho >= 1 && Wo >= 1, "maxpool2d: input smaller than window");
  Tensor<T> y({B, C, Ho, Wo});
  auto argmax = std::make_shared<std::vector<size_t>>(y.size());
#pragma omp parallel for schedule(static)
  for (int bc = 0; bc < B * C; ++bc) {
    const size_t in0 = static_cast<size_t>(bc) * H * W;
    for (int oh = 0; oh < Ho; ++oh)
      for (int ow = 0; ow < Wo; ++ow) {
        size_t best = in0 + static_cast<size_t>(oh * k) * W + ow * k;
        for (int i = 0; i < k; ++i)
          for (int j = 0; j < k; ++j) {
            const size_t idx = in0 + static_cast<size_t>(oh * k + i) * W + ow * k + j;
            if (xv[idx] > xv[best]) best = idx;
          }
        const size_t o = (static_cast<size_t>(bc) * Ho + oh) * Wo + ow;
        y[o] = xv[best];
        (*argmax)[o] = best;
      }
  }
  return g.op(std::move(y), {x}, [x, argmax](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    auto& gx = g.grad(x);
    for (size_t o = 0; o < gy.size(); ++o) gx[(*argmax)[o]] += gy[o];
  });
}

template <typename T>
int relu(Graph<T>& g, int x) {
  return unary(
      g, x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); });
}

template <typename T>
int sigmoid(Graph<T>& g, int x) {
  return unary(
      g, x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
int abs(Graph<T>& g, int x) {
  return unary(
      g, x, [](T v) { return std::abs(v); },
      [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); });
}

template <typename T>
int spatial_softmax(Graph<T>& g, int x) {
  const Tensor<T>& xv = g.value(x);
  require(xv.rank() == 4 && xv.dim(1) == 1, "spatial_softmax: expected [B,1,H,W]");
  const int B = xv.dim(0), H = xv.dim(2), W = xv.dim(3);
  const size_t HW = static_cast<size_t>(H) * W;
  auto prob = std::make_shared<std::vector<T>>(xv.size());
  Tensor<T> y({B, 2});
  for (int n = 0; n < B; ++n) {
    const T* in = xv.data() + n * HW;
    T* p = prob->data() + n * HW;
    const T m = *std::max_element(in, in + HW);
    T z = 0;
    for (size_t i = 0; i < HW; ++i) z += (p[i] = std::exp(in[i] - m));
    T eu = 0, ev = 0;
    for (size_t i = 0; i < HW; ++i) {
      p[i] /= z;
      eu += p[i] * T(i % W);
      ev += p[i] * T(i / W);
    }
    y[2 * n] = eu;
    y[2 * n + 1] = ev;
  }
  return g.op(std::move(y), {x}, [x, prob, B, W, HW](Graph<T>& g, int self) {
    const Tensor<T>& yv = g.value(self);
    const Tensor<T>& gy = g.grad(self);
    auto& gx = g.grad(x);
    for (int n = 0; n < B; ++n) {
      const T* p = prob->data() + n * HW;
      const T eu = yv[2 * n], ev = yv[2 * n + 1], gu = gy[2 * n], gv = gy[2 * n + 1];
      for (size_t i = 0; i < HW; ++i)
        gx[n * HW + i] += p[i] * (gu * (T(i % W) - eu) + gv * (T(i / W) - ev));
    }
  });
}

template <typename T>
int reshape(Graph<T>& g, int x, std::vector<int> shape) {
  Tensor<T> y = g.value(x);
  y.reshape(std::move(shape));
  return g.op(std::move(y), {x}, [x](Graph<T>& g, int self) { accumulate(g, x, g.grad(self).data()); });
}

template <typename T>
int concat(Graph<T>& g, const std::vector<int>& xs) {
  require(!xs.empty(), "concat: no inputs");
  const int B = g.value(xs[0]).dim(0);
  std::vector<int> widths;
  int total = 0;
  for (int v : xs) {
    const Tensor<T>& t = g.value(v);
    require(t.rank() == 2 && t.dim(0) == B, "concat: expected [B, n] inputs with equal B");
    widths.push_back(t.dim(1));
    total += t.dim(1);
  }
  Tensor<T> y({B, total});
  int off = 0;
  for (size_t k = 0; k < xs.size(); ++k) {
    const Tensor<T>& t = g.value(xs[k]);
    for (int n = 0; n < B; ++n)
      std::copy(t.data() + n * widths[k], t.data() + (n + 1) * widths[k], y.data() + n * total + off);
    off += widths[k];
  }
  return g.op(std::move(y), xs, [xs, widths, B, total](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    int off = 0;
    for (size_t k = 0; k < xs.size(); ++k) {
      if (g.requires_grad(xs[k])) {
        auto& gx = g.grad(xs[k]);
        for (int n = 0; n < B; ++n)
          for (int i = 0; i < widths[k]; ++i) gx[n * widths[k] + i] += gy[n * total + off + i];
      }
      off += widths[k];
    }
  });
}

template <typename T>
int slice(Graph<T>& g, int x, int start, int len) {
  const Tensor<T>& xv = g.value(x);
  require(xv.rank() == 2 && start >= 0 && len >= 1 && start + len <= xv.dim(1), "slice: out of range");
  const int B = xv.dim(0), W = xv.dim(1);
  Tensor<T> y({B, len});
  for (int n = 0; n < B; ++n)
    for (int i = 0; i < len; ++i) y[n * len + i] = xv[n * W + start + i];
  return g.op(std::move(y), {x}, [x, B, W, start, len](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    auto& gx = g.grad(x);
    for (int n = 0; n < B; ++n)
      for (int i = 0; i < len; ++i) gx[n * W + start + i] += gy[n * len + i];
  });
}

template <typename T>
int add(Graph<T>& g, int a, int b) {
  require_same_shape(g, a, b, "add");
  Tensor<T> y = g.value(a);
  const Tensor<T>& bv = g.value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  return g.op(std::move(y), {a, b}, [a, b](Graph<T>& g, int self) {
    accumulate(g, a, g.grad(self).data());
    accumulate(g, b, g.grad(self).data());
  });
}

template <typename T>
int sub(Graph<T>& g, int a, int b) {
  require_same_shape(g, a, b, "sub");
  Tensor<T> y = g.value(a);
  const Tensor<T>& bv = g.value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  return g.op(std::move(y), {a, b}, [a, b](Graph<T>& g, int self) {
    accumulate(g, a, g.grad(self).data());
    if (g.requires_grad(b)) {
      const Tensor<T>& gy = g.grad(self);
      auto& gb = g.grad(b);
      for (size_t i = 0; i < gb.size(); ++i) gb[i] -= gy[i];
    }
  });
}

template <typename T>
int mul(Graph<T>& g, int a, int b) {
  require_same_shape(g, a, b, "mul");
  Tensor<T> y = g.value(a);
  const Tensor<T>& bv = g.value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  return g.op(std::move(y), {a, b}, [a, b](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    if (g.requires_grad(a)) {
      auto& ga = g.grad(a);
      for (size_t i = 0; i < ga.size(); ++i) ga[i] += gy[i] * g.value(b)[i];
    }
    if (g.requires_grad(b)) {
      auto& gb = g.grad(b);
      for (size_t i = 0; i < gb.size(); ++i) gb[i] += gy[i] * g.value(a)[i];
    }
  });
}

template <typename T>
int scale(Graph<T>& g, int x, T factor) {
  Tensor<T> y = g.value(x);
  for (auto& v : y.values()) v *= factor;
  return g.op(std::move(y), {x}, [x, factor](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    auto& gx = g.grad(x);
    for (size_t i = 0; i < gx.size(); ++i) gx[i] += factor * gy[i];
  });
}

template <typename T>
int mul_rows(Graph<T>& g, int x, int s) {
  const Tensor<T>& xv = g.value(x);
  const Tensor<T>& sv = g.value(s);
  require(xv.rank() == 2 && sv.rank() == 2 && sv.dim(1) == 1 && sv.dim(0) == xv.dim(0),
          "mul_rows: expected x[B,k] and s[B,1]");
  const int B = xv.dim(0), K = xv.dim(1);
  Tensor<T> y = xv;
  for (int n = 0; n < B; ++n)
    for (int i = 0; i < K; ++i) y[n * K + i] *= sv[n];
  return g.op(std::move(y), {x, s}, [x, s, B, K](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    if (g.requires_grad(x)) {
      auto& gx = g.grad(x);
      for (int n = 0; n < B; ++n)
        for (int i = 0; i < K; ++i) gx[n * K + i] += gy[n * K + i] * g.value(s)[n];
    }
    if (g.requires_grad(s)) {
      auto& gs = g.grad(s);
      for (int n = 0; n < B; ++n)
        for (int i = 0; i < K; ++i) gs[n] += gy[n * K + i] * g.value(x)[n * K + i];
    }
  });
}

template <typename T>
int row_norm(Graph<T>& g, int x) {
  const Tensor<T>& xv = g.value(x);
  require(xv.rank() == 2, "row_norm: expected [B, k]");
  const int B = xv.dim(0), K = xv.dim(1);
  Tensor<T> y({B, 1});
  for (int n = 0; n < B; ++n) {
    T acc = 0;
    for (int i = 0; i < K; ++i) acc += xv[n * K + i] * xv[n * K + i];
    y[n] = std::sqrt(acc);
  }
  return g.op(std::move(y), {x}, [x, B, K](Graph<T>& g, int self) {
    const Tensor<T>& yv = g.value(self);
    const Tensor<T>& gy = g.grad(self);
    auto& gx = g.grad(x);
    for (int n = 0; n < B; ++n) {
      if (yv[n] == T(0)) continue;
      for (int i = 0; i < K; ++i) gx[n * K + i] += gy[n] * g.value(x)[n * K + i] / yv[n];
    }
  });
}

template <typename T>
int normalize_rows(Graph<T>& g, int x, T eps) {
  const Tensor<T>& xv = g.value(x);
  require(xv.rank() == 2, "normalize_rows: expected [B, k]");
  const int B = xv.dim(0), K = xv.dim(1);
  auto norms = std::make_shared<std::vector<T>>(B);
  Tensor<T> y = xv;
  for (int n = 0; n < B; ++n) {
    T acc = 0;
    for (int i = 0; i < K; ++i) acc += xv[n * K + i] * xv[n * K + i];
    (*norms)[n] = std::sqrt(acc);
    const T d = std::max((*norms)[n], eps);
    for (int i = 0; i < K; ++i) y[n * K + i] /= d;
  }
  return g.op(std::move(y), {x}, [x, B, K, eps, norms](Graph<T>& g, int self) {
    const Tensor<T>& yv = g.value(self);
    const Tensor<T>& gy = g.grad(self);
    auto& gx = g.grad(x);
    for (int n = 0; n < B; ++n) {
      const T r = (*norms)[n];
      if (r < eps) {
        for (int i = 0; i < K; ++i) gx[n * K + i] += gy[n * K + i] / eps;
        continue;
      }
      T dot = 0;
      for (int i = 0; i < K; ++i) dot += gy[n * K + i] * yv[n * K + i];
      for (int i = 0; i < K; ++i) gx[n * K + i] += (gy[n * K + i] - dot * yv[n * K + i]) / r;
    }
  });
}

template <typename T>
int sum_all(Graph<T>& g, int x) {
  T acc = 0;
  for (T v : g.value(x).values()) acc += v;
  return g.op(Tensor<T>({1}, std::vector<T>{acc}), {x}, [x](Graph<T>& g, int self) {
    const T gy = g.grad(self)[0];
    for (auto& v : g.grad(x).values()) v += gy;
  });
}

template <typename T>
int mean_all(Graph<T>& g, int x) {
  const size_t n = g.value(x).size();
  require(n > 0, "mean_all: empty tensor");
  return scale(g, sum_all(g, x), T(1) / T(n));
}

template <typename T>
int l2_penalty(Graph<T>& g, const std::vector<int>& params, T lambda) {
  T acc = 0;
  for (int p : params)
    for (T v : g.value(p).values()) acc += v * v;
  return g.op(Tensor<T>({1}, std::vector<T>{T(0.5) * lambda * acc}), params,
              [params, lambda](Graph<T>& g, int self) {
                const T gy = g.grad(self)[0];
                for (int p : params) {
                  if (!g.requires_grad(p)) continue;
                  auto& gp = g.grad(p);
                  for (size_t i = 0; i < gp.size(); ++i) gp[i] += gy * lambda * g.value(p)[i];
                }
              });
}

template <typename T>
int binary_cross_entropy(Graph<T>& g, int p, int target) {
  require_same_shape(g, p, target, "binary_cross_entropy");
  static constexpr T lo = T(1e-7), hi = T(1) - T(1e-7);
  const Tensor<T>& pv = g.value(p);
  const Tensor<T>& tv = g.value(target);
  Tensor<T> y(pv.shape());
  for (size_t i = 0; i < y.size(); ++i) {
    const T q = std::clamp(pv[i], lo, hi);
    y[i] = -(tv[i] * std::log(q) + (T(1) - tv[i]) * std::log(T(1) - q));
  }
  return g.op(std::move(y), {p, target}, [p, target](Graph<T>& g, int self) {
    const Tensor<T>& gy = g.grad(self);
    const Tensor<T>& pv = g.value(p);
    const Tensor<T>& tv = g.value(target);
    if (g.requires_grad(p)) {
      auto& gp = g.grad(p);
      for (size_t i = 0; i < gp.size(); ++i) {
        if (pv[i] < lo || pv[i] > hi) continue;  // clamped: flat
        gp[i] += gy[i] * (-tv[i] / pv[i] + (T(1) - tv[i]) / (T(1) - pv[i]));
      }
    }
    if (g.requires_grad(target)) {
      auto& gt = g.grad(target);
      for (size_t i = 0; i < gt.size(); ++i) {
        const T q = std::clamp(pv[i], lo, hi);
        gt[i] += gy[i] * (std::log(T(1) - q) - std::log(q));
      }
    }
  });
}

#define PUSHNET_INSTANTIATE_OPS(T)                                                 \
  template int dense<T>(Graph<T>&, int, int, int);                                 \
  template int conv2d<T>(Graph<T>&, int, int, int, int, int);                      \
  template int conv_transpose2d<T>(Graph<T>&, int, int, int, int, int, int);       \
  template int maxpool2d<T>(Graph<T>&, int, int);                                  \
  template int relu<T>(Graph<T>&, int);                                            \
  template int sigmoid<T>(Graph<T>&, int);                                         \
  template int abs<T>(Graph<T>&, int);                                             \
  template int spatial_softmax<T>(Graph<T>&, int);                                 \
  template int reshape<T>(Graph<T>&, int, std::vector<int>);                       \
  template int concat<T>(Graph<T>&, const std::vector<int>&);                      \
  template int slice<T>(Graph<T>&, int, int, int);                                 \
  template int add<T>(Graph<T>&, int, int);                                        \
  template int sub<T>(Graph<T>&, int, int);                                        \
  template int mul<T>(Graph<T>&, int, int);                                        \
  template int scale<T>(Graph<T>&, int, T);                                        \
  template int mul_rows<T>(Graph<T>&, int, int);                                   \
  template int row_norm<T>(Graph<T>&, int);                                        \
  template int normalize_rows<T>(Graph<T>&, int, T);                               \
  template int sum_all<T>(Graph<T>&, int);                                         \
  template int mean_all<T>(Graph<T>&, int);                                        \
  template int l2_penalty<T>(Graph<T>&, const std::vector<int>&, T);               \
  template int binary_cross_entropy<T>(Graph<T>&, int, int);

PUSHNET_INSTANTIATE_OPS(float)
PUSHNET_INSTANTIATE_OPS(double)

}  // namespace pushnet::nn
