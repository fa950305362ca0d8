#include "pushnet/nn/kernels.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cstring>

namespace pushnet::nn {

namespace {

constexpr int kRowChunk = 64;

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

}  // namespace

namespace kernels {

template <typename T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, T alpha, const T* A, const T* B, T beta, T* C) {
  using Map = Eigen::Map<const MatR<T>>;
  const Map a(A, trans_a ? K : M, trans_a ? M : K);
  const Map b(B, trans_b ? N : K, trans_b ? K : N);
  Eigen::Map<MatR<T>> c(C, M, N);
  const int chunks = (M + kRowChunk - 1) / kRowChunk;

#pragma omp parallel for schedule(static) if (chunks > 1)
  for (int ch = 0; ch < chunks; ++ch) {
    const int r0 = ch * kRowChunk;
    const int rows = std::min(kRowChunk, M - r0);
    auto out = c.middleRows(r0, rows);
    if (beta == T(0)) out.setZero();
    else if (beta != T(1)) out *= beta;
    if (!trans_a && !trans_b) out.noalias() += alpha * a.middleRows(r0, rows) * b;
    else if (!trans_a && trans_b) out.noalias() += alpha * a.middleRows(r0, rows) * b.transpose();
    else if (trans_a && !trans_b) out.noalias() += alpha * a.middleCols(r0, rows).transpose() * b;
    else out.noalias() += alpha * a.middleCols(r0, rows).transpose() * b.transpose();
  }
}

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols) {
  const int Ho = g.out_height(), Wo = g.out_width(), k = g.kernel;
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = cols + static_cast<size_t>((c * k + ki) * k + kj) * Ho * Wo;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          T* dst = row + static_cast<size_t>(oh) * Wo;
          if (ih < 0 || ih >= g.height) {
            std::fill(dst, dst + Wo, T(0));
            continue;
          }
          const T* src = x + (static_cast<size_t>(c) * g.height + ih) * g.width;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            dst[ow] = (iw >= 0 && iw < g.width) ? src[iw] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* x) {
  const int Ho = g.out_height(), Wo = g.out_width(), k = g.kernel;
  for (int c = 0; c < g.channels; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = cols + static_cast<size_t>((c * k + ki) * k + kj) * Ho * Wo;
        for (int oh = 0; oh < Ho; ++oh) {
          const int ih = oh * g.stride - g.pad + ki;
          if (ih < 0 || ih >= g.height) continue;
          T* dst = x + (static_cast<size_t>(c) * g.height + ih) * g.width;
          const T* src = row + static_cast<size_t>(oh) * Wo;
          for (int ow = 0; ow < Wo; ++ow) {
            const int iw = ow * g.stride - g.pad + kj;
            if (iw >= 0 && iw < g.width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, int batch, const ConvGeometry& g, T* y, T* cols) {
  const int HWo = g.out_height() * g.out_width();
  const size_t in_size = static_cast<size_t>(g.channels) * g.height * g.width;
  const size_t col_size = static_cast<size_t>(g.patch()) * HWo;
  const size_t out_size = static_cast<size_t>(g.out_channels) * HWo;

#pragma omp parallel
  {
    std::vector<T> local(cols ? 0 : col_size);
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      T* c = cols ? cols + n * col_size : local.data();
      im2col(x + n * in_size, g, c);
      T* out = y + n * out_size;
      for (int o = 0; o < g.out_channels; ++o) std::fill(out + o * HWo, out + (o + 1) * HWo, b ? b[o] : T(0));
      Eigen::Map<const MatR<T>> wm(w, g.out_channels, g.patch());
      Eigen::Map<const MatR<T>> cm(c, g.patch(), HWo);
      Eigen::Map<MatR<T>> om(out, g.out_channels, HWo);
      om.noalias() += wm * cm;
    }
  }
}

template <typename T>
void conv2d_backward(const T* dy, const T* w, const T* cols, int batch, const ConvGeometry& g, T* dx, T* dw,
                     T* db) {
  const int HWo = g.out_height() * g.out_width();
  const int P = g.patch();
  const size_t in_size = static_cast<size_t>(g.channels) * g.height * g.width;
  const size_t col_size = static_cast<size_t>(P) * HWo;
  const size_t out_size = static_cast<size_t>(g.out_channels) * HWo;
  const size_t w_size = static_cast<size_t>(g.out_channels) * P;

  // Per-sample weight gradients, reduced in sample order afterwards.
  std::vector<T> dw_per(static_cast<size_t>(batch) * w_size);
  Eigen::Map<const MatR<T>> wm(w, g.out_channels, P);

#pragma omp parallel
  {
    std::vector<T> dcols(dx ? col_size : 0);
#pragma omp for schedule(static)
    for (int n = 0; n < batch; ++n) {
      Eigen::Map<const MatR<T>> dym(dy + n * out_size, g.out_channels, HWo);
      Eigen::Map<const MatR<T>> cm(cols + n * col_size, P, HWo);
      Eigen::Map<MatR<T>> dwm(dw_per.data() + n * w_size, g.out_channels, P);
      dwm.noalias() = dym * cm.transpose();
      if (dx) {
        Eigen::Map<MatR<T>> dcm(dcols.data(), P, HWo);
        dcm.noalias() = wm.transpose() * dym;
        T* dxn = dx + n * in_size;
        std::fill(dxn, dxn + in_size, T(0));
        col2im(dcols.data(), g, dxn);
      }
    }
  }

#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(w_size); ++i) {
    T acc = 0;
    for (int n = 0; n < batch; ++n) acc += dw_per[n * w_size + i];
    dw[i] = acc;
  }
  if (db) {
    for (int o = 0; o < g.out_channels; ++o) {
      T acc = 0;
      for (int n = 0; n < batch; ++n) {
        const T* row = dy + n * out_size + static_cast<size_t>(o) * HWo;
        for (int i = 0; i < HWo; ++i) acc += row[i];
      }
      db[o] = acc;
    }
  }
}

}  // namespace kernels

namespace reference {

template <typename T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, T alpha, const T* A, const T* B, T beta, T* C) {
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < N; ++j) {
      T acc = 0;
      for (int p = 0; p < K; ++p) {
        const T a = trans_a ? A[p * M + i] : A[i * K + p];
        const T b = trans_b ? B[j * K + p] : B[p * N + j];
        acc += a * b;
      }
      C[i * N + j] = alpha * acc + (beta == T(0) ? T(0) : beta * C[i * N + j]);
    }
  }
}

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, int batch, const ConvGeometry& g, T* y) {
  const int Ho = g.out_height(), Wo = g.out_width(), k = g.kernel;
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          T acc = b ? b[o] : T(0);
          for (int c = 0; c < g.channels; ++c)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj) {
                const int ih = oh * g.stride - g.pad + ki, iw = ow * g.stride - g.pad + kj;
                if (ih < 0 || ih >= g.height || iw < 0 || iw >= g.width) continue;
                acc += w[((o * g.channels + c) * k + ki) * k + kj] *
                       x[((static_cast<size_t>(n) * g.channels + c) * g.height + ih) * g.width + iw];
              }
          y[((static_cast<size_t>(n) * g.out_channels + o) * Ho + oh) * Wo + ow] = acc;
        }
}

template <typename T>
void conv2d_backward(const T* x, const T* dy, const T* w, int batch, const ConvGeometry& g, T* dx, T* dw,
                     T* db) {
  const int Ho = g.out_height(), Wo = g.out_width(), k = g.kernel;
  const size_t in_size = static_cast<size_t>(batch) * g.channels * g.height * g.width;
  if (dx) std::fill(dx, dx + in_size, T(0));
  std::fill(dw, dw + static_cast<size_t>(g.out_channels) * g.patch(), T(0));
  if (db) std::fill(db, db + g.out_channels, T(0));
  for (int n = 0; n < batch; ++n)
    for (int o = 0; o < g.out_channels; ++o)
      for (int oh = 0; oh < Ho; ++oh)
        for (int ow = 0; ow < Wo; ++ow) {
          const T gy = dy[((static_cast<size_t>(n) * g.out_channels + o) * Ho + oh) * Wo + ow];
          if (db) db[o] += gy;
          for (int c = 0; c < g.channels; ++c)
            for (int ki = 0; ki < k; ++ki)
              for (int kj = 0; kj < k; ++kj) {
                const int ih = oh * g.stride - g.pad + ki, iw = ow * g.stride - g.pad + kj;
                if (ih < 0 || ih >= g.height || iw < 0 || iw >= g.width) continue;
                const size_t xi = ((static_cast<size_t>(n) * g.channels + c) * g.height + ih) * g.width + iw;
                const size_t wi = ((o * g.channels + c) * k + ki) * k + kj;
                dw[wi] += gy * x[xi];
                if (dx) dx[xi] += gy * w[wi];
              }
        }
}

}  // namespace reference

#define PUSHNET_INSTANTIATE(T)                                                                        \
  template void kernels::gemm<T>(bool, bool, int, int, int, T, const T*, const T*, T, T*);            \
  template void kernels::im2col<T>(const T*, const ConvGeometry&, T*);                                \
  template void kernels::col2im<T>(const T*, const ConvGeometry&, T*);                                \
  template void kernels::conv2d_forward<T>(const T*, const T*, const T*, int, const ConvGeometry&, T*, \
                                           T*);                                                       \
  template void kernels::conv2d_backward<T>(const T*, const T*, const T*, int, const ConvGeometry&,   \
                                            T*, T*, T*);                                              \
  template void reference::gemm<T>(bool, bool, int, int, int, T, const T*, const T*, T, T*);          \
  template void reference::conv2d_forward<T>(const T*, const T*, const T*, int, const ConvGeometry&,  \
                                             T*);                                                     \
  template void reference::conv2d_backward<T>(const T*, const T*, const T*, int, const ConvGeometry&, \
                                              T*, T*, T*);

PUSHNET_INSTANTIATE(float)
PUSHNET_INSTANTIATE(double)

}  // namespace pushnet::nn
