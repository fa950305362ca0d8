#pragma once

#include <vector>

// Dense compute kernels on row-major buffers. The kernels:: versions are
// OpenMP-parallel and split work into fixed chunks, so results do not depend
// on the thread count. reference:: holds naive serial versions for tests and
// benchmarks.
namespace pushnet::nn {

struct ConvGeometry {
  int channels = 1;  // input channels
  int height = 1;
  int width = 1;
  int out_channels = 1;
  int kernel = 3;
  int stride = 1;
  int pad = 1;

  int out_height() const { return (height + 2 * pad - kernel) / stride + 1; }
  int out_width() const { return (width + 2 * pad - kernel) / stride + 1; }
  int patch() const { return channels * kernel * kernel; }
};

namespace kernels {

/// C[M x N] = alpha * op(A) * op(B) + beta * C, all row-major. op(A) is M x K.
template <typename T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, T alpha, const T* A, const T* B, T beta, T* C);

template <typename T>
void im2col(const T* x, const ConvGeometry& g, T* cols);
/// Accumulates cols back into x (x is not cleared).
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* x);

/// x: [B, C, H, W], w: [O, C, k, k], b: [O] -> y: [B, O, Ho, Wo].
/// cols (optional, size B * patch * Ho * Wo) receives the im2col buffers.
template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, int batch, const ConvGeometry& g, T* y,
                    T* cols = nullptr);

/// Gradients given dy and the im2col buffers from the forward pass. dx may be
/// null; dw/db are overwritten.
template <typename T>
void conv2d_backward(const T* dy, const T* w, const T* cols, int batch, const ConvGeometry& g, T* dx,
                     T* dw, T* db);

}  // namespace kernels

namespace reference {

template <typename T>
void gemm(bool trans_a, bool trans_b, int M, int N, int K, T alpha, const T* A, const T* B, T beta, T* C);

template <typename T>
void conv2d_forward(const T* x, const T* w, const T* b, int batch, const ConvGeometry& g, T* y);

template <typename T>
void conv2d_backward(const T* x, const T* dy, const T* w, int batch, const ConvGeometry& g, T* dx, T* dw,
                     T* db);

}  // namespace reference

}  // namespace pushnet::nn
