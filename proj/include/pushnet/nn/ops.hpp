#pragma once

#include "pushnet/nn/graph.hpp"

#include <vector>

// Differentiable ops on Graph<T>. Batched tensors put the batch first;
// images are [B, C, H, W].
namespace pushnet::nn {

/// x: [B, in], W: [out, in], b: [out] -> [B, out].
template <typename T>
int dense(Graph<T>& g, int x, int W, int b);

/// Zero-padded convolution; W: [O, C, k, k], b: [O].
template <typename T>
int conv2d(Graph<T>& g, int x, int W, int b, int stride, int pad);

/// Adjoint of conv2d; W: [C_in, C_out, k, k]. Output size is
/// (H - 1) * stride - 2 * pad + k + output_pad.
template <typename T>
int conv_transpose2d(Graph<T>& g, int x, int W, int b, int stride, int pad, int output_pad);

/// Non-overlapping k x k max pooling (floor on odd sizes).
template <typename T>
int maxpool2d(Graph<T>& g, int x, int k);

template <typename T>
int relu(Graph<T>& g, int x);
template <typename T>
int sigmoid(Graph<T>& g, int x);

/// x: [B, 1, H, W] -> [B, 2] holding the expected (column, row) coordinate.
template <typename T>
int spatial_softmax(Graph<T>& g, int x);

template <typename T>
int reshape(Graph<T>& g, int x, std::vector<int> shape);
/// Concatenates [B, n_i] tensors along the second axis.
template <typename T>
int concat(Graph<T>& g, const std::vector<int>& xs);
/// Columns [start, start + len) of a [B, n] tensor.
template <typename T>
int slice(Graph<T>& g, int x, int start, int len);

template <typename T>
int add(Graph<T>& g, int a, int b);
template <typename T>
int sub(Graph<T>& g, int a, int b);
template <typename T>
int mul(Graph<T>& g, int a, int b);
template <typename T>
int scale(Graph<T>& g, int x, T factor);
/// x: [B, k], s: [B, 1] -> x scaled row-wise by s.
template <typename T>
int mul_rows(Graph<T>& g, int x, int s);
template <typename T>
int abs(Graph<T>& g, int x);

/// Euclidean norm of each row: [B, k] -> [B, 1]. The subgradient at zero is 0.
template <typename T>
int row_norm(Graph<T>& g, int x);
/// Rows scaled to unit length; rows shorter than eps are divided by eps.
template <typename T>
int normalize_rows(Graph<T>& g, int x, T eps = T(1e-6));

template <typename T>
int sum_all(Graph<T>& g, int x);
template <typename T>
int mean_all(Graph<T>& g, int x);

/// 0.5 * lambda * sum of squared entries over the given parameter nodes.
template <typename T>
int l2_penalty(Graph<T>& g, const std::vector<int>& params, T lambda);

/// Binary cross-entropy per element; p is clamped to [1e-7, 1 - 1e-7].
template <typename T>
int binary_cross_entropy(Graph<T>& g, int p, int target);

}  // namespace pushnet::nn
