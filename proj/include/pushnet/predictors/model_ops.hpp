#pragma once

#include "pushnet/core/types.hpp"
#include "pushnet/nn/graph.hpp"
#include "pushnet/raster/raster.hpp"

#include <memory>
#include <vector>

// Graph nodes wrapping the analytical model and the camera geometry.
namespace pushnet::predictors {

/// Full two-stage model per row. c_rel, n, u: [B, 2]; s, l: [B, 1]; mu per row.
/// Output [B, 3] = (v_ox, v_oy, omega). Gradients are the selected-branch
/// Jacobians.
template <typename T>
int pushmodel_op(nn::Graph<T>& g, int c_rel, int n, int s, int u, int l, std::vector<double> mu);

/// Stage 2 only with s = 1. v_p, c_rel: [B, 2]; l: [B, 1] -> [B, 3].
template <typename T>
int stage2_op(nn::Graph<T>& g, int v_p, int c_rel, int l);

/// Pixel coordinates [B, 2] -> table-plane point (x, y) at height plane_z.
template <typename T>
int pixel_to_plane_op(nn::Graph<T>& g, int px, const Camera& camera, double plane_z);

/// Pixel coordinates [B, 2] -> world (x, y) using bilinear depth from the
/// row's image. Pixels are clamped into the image; clamped axes get no gradient.
template <typename T>
int unproject_op(nn::Graph<T>& g, int px, std::vector<const raster::DepthImage*> images);

}  // namespace pushnet::predictors
