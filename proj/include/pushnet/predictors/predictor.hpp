#pragma once

#include "pushnet/core/types.hpp"
#include "pushnet/nn/graph.hpp"
#include "pushnet/sim/simulator.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace pushnet::predictors {

enum class Variant { Neural, Simple, Hybrid, Error, ErrorGrad, ErrorNorm, NeuralDyn, Physics, Zero };

std::string to_string(Variant v);
/// Throws Error(InvalidArgument) on an unknown tag.
Variant parse_variant(const std::string& tag);
const std::vector<Variant>& all_variants();

bool is_learnable(Variant v);
/// Uses the image stream (and therefore predicts the object position).
bool has_perception(Variant v);
bool is_error_family(Variant v);
/// Reads the ground-truth contact state instead of the image.
bool uses_ground_truth(Variant v);

enum class LossKind { TopDown, Viewpoint };

std::string to_string(LossKind k);
LossKind parse_loss(const std::string& tag);

struct ArchConfig {
  int glimpse = 32;                                // pixels, even
  std::vector<int> position_channels = {8, 16, 16, 16};
  std::vector<int> glimpse_channels = {8, 16, 16};
  int glimpse_stride = 1;                          // conv stride inside the glimpse stack
  int mlp_width = 256;
  int mlp_layers = 3;
  double depth_scale = 0.02;      // metres per standardized unit above the table
  double contact_plane_z = 10.0;  // mm; pixel -> table-plane conversions
  double action_scale = 10.0;     // mm; action inputs are divided by this
  double s_bias_init = 1.0;       // contact head sigmoid bias at init
  double output_gain = 0.1;       // init scale of linear output layers
  bool neural_uses_mu = false;
  double l_factor = 1.0;          // multiplies l inside the analytical model
  LossKind loss = LossKind::TopDown;
  double weight_decay = 0.001;
  double contact_weight = 10.0;   // viewpoint loss
};

nlohmann::json arch_to_json(const ArchConfig& a);
ArchConfig arch_from_json(const nlohmann::json& j);

/// Per-dataset input geometry: camera, image size and bare-table depth.
struct InputSpec {
  Camera camera;
  int width = 0;
  int height = 0;
  std::vector<float> table_m;
};

InputSpec make_input_spec(const Camera& camera, int width, int height);

/// Network inputs and targets for a set of records. Image tensors are in
/// standardized height units: (table depth - depth) / depth_scale.
struct Batch {
  int size = 0;
  nn::Tensor<double> image;      // [B, 1, H, W]
  nn::Tensor<double> glimpse;    // [B, 1, G, G]
  nn::Tensor<double> pusher_px;  // [B, 2]
  nn::Tensor<double> pusher;     // [B, 2] world mm
  nn::Tensor<double> u;          // [B, 2] mm
  nn::Tensor<double> l;          // [B, 1] mm, reported l times l_factor
  std::vector<double> mu;
  std::vector<const raster::DepthImage*> images;
  // targets
  nn::Tensor<double> twist;  // [B, 3] (vx, vy, omega rad)
  nn::Tensor<double> pos;    // [B, 2]
  nn::Tensor<double> s;      // [B, 1]
  // ground-truth contact state (first-contact convention)
  nn::Tensor<double> gt_c_rel;  // [B, 2]
  nn::Tensor<double> gt_n;      // [B, 2]
  nn::Tensor<double> gt_u;      // [B, 2]
};

/// Throws Error(Geometry) when a pusher projects outside the image.
Batch make_batch(const std::vector<const sim::DatasetRecord*>& records, const InputSpec& spec,
                 const ArchConfig& arch, bool need_images);

/// Graph handles of one forward pass; -1 where a variant has no such output.
struct Outputs {
  int twist = -1;        // final prediction [B, 3]
  int pos = -1;          // [B, 2]
  int s = -1;            // contact indicator [B, 1]
  int model_twist = -1;  // analytical branch before the error term ([B, 3]; s = 1 in viewpoint training)
  int err = -1;          // error term [B, 3]
  int c = -1;            // predicted contact point, world [B, 2]
  int n = -1;            // predicted normal, world [B, 2]
  int v_p = -1;          // simple variant
  std::vector<int> decay_params;
};

struct LossOutputs {
  int total = -1;
  int trans = -1;
  int mag = -1;
  int rot = -1;
  int pos = -1;
  int contact = -1;
  int decay = -1;
};

class Model {
 public:
  Model(Variant variant, ArchConfig arch, int image_size);

  Variant variant() const { return variant_; }
  const ArchConfig& arch() const { return arch_; }
  int image_size() const { return image_size_; }
  int code_size() const;

  /// Registers and initializes every parameter (empty for zero and physics).
  void init(nn::ParamStore<float>& params, std::uint64_t seed) const;

  /// Forward pass for learnable variants. With the viewpoint loss the model
  /// runs at s = 1 and the contact head scales its output afterwards.
  template <typename T>
  Outputs forward(nn::Graph<T>& g, nn::ParamStore<T>& params, const Batch& batch) const;

  template <typename T>
  LossOutputs loss(nn::Graph<T>& g, const Outputs& out, const Batch& batch) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

 private:
  Variant variant_;
  ArchConfig arch_;
  int image_size_;
};

/// loss_2d on explicit tensors: trans + mag + rot(deg) + pos, batch means.
/// pos_pred may be -1 (no position term).
template <typename T>
LossOutputs loss_2d(nn::Graph<T>& g, int twist_pred, int pos_pred, int twist_label, int pos_label);

/// s * (trans + rot) + pos + contact_weight * BCE(s_pred, s), batch means.
template <typename T>
LossOutputs loss_viewpoint(nn::Graph<T>& g, int twist_pred, int s_pred, int pos_pred, int twist_label,
                           int s_label, int pos_label, double contact_weight);

/// Fixed (non-learnable) predictors evaluated on the ground-truth state.
Twist2 physics_prediction(const sim::DatasetRecord& r, double l_factor);

}  // namespace pushnet::predictors
