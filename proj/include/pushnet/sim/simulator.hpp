#pragma once

#include "pushnet/core/types.hpp"
#include "pushnet/raster/raster.hpp"
#include "pushnet/sim/scene.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pushnet::sim {

struct NoiseConfig {
  double pose_obs_sigma = 0.0;           // mm for x/y, degrees for theta
  double friction_jitter = 0.0;          // relative sd of the reported l
  double motion_multiplier_sigma = 0.0;  // lognormal sd of the label magnitude; also the direction jitter in rad
  double bimodal_prob = 0.0;             // chance of flipping the label into the mirrored mode

  bool any() const {
    return pose_obs_sigma > 0.0 || friction_jitter > 0.0 || motion_multiplier_sigma > 0.0 ||
           bimodal_prob > 0.0;
  }
};

struct CameraSpec {
  CameraMode mode = CameraMode::TopDown;
  int image_size = 128;
  double table_half_extent = raster::kTableHalfExtent;
  Vec3 position = Vec3(0.0, -250.0, 400.0);  // pinhole only, mm
  Vec3 target = Vec3::Zero();
};

Camera make_camera(const CameraSpec& spec);

struct GenConfig {
  std::vector<std::string> objects;  // empty means the whole catalog
  std::vector<double> push_speeds = {20.0};  // mm/s
  double push_length = 50.0;                 // mm
  double horizon = 0.5;                      // s
  double rate = 250.0;                       // Hz
  std::vector<double> angles;                // degrees from the inward normal
  std::vector<double> contact_fracs;         // boundary arc-length fractions; empty = uniform
  int n_records = 1000;
  double no_contact_frac = 1.0 / 3.0;
  int augment_transforms_per_push = 4;
  double approach_gap_max = 2.5;  // mm
  double mu = 0.25;
  double l_scale = 1.0;  // multiplies the uniform-pressure l of each shape
  NoiseConfig noise;
  CameraSpec camera;
  std::uint64_t seed = 1;
  std::uint64_t id_offset = 0;  // first record id; keeps ids of separately generated sets disjoint

  GenConfig();
};

struct DatasetRecord {
  std::uint64_t id = 0;
  std::uint64_t push_id = 0;
  std::string object_id;
  raster::DepthImage depth;
  PushAction action;
  Pose2 pose_before;
  Pose2 pose_after;
  ContactInfo contact_gt;  // at push start, or at first contact within the window
  PushAction contact_action;  // action shortened to start at first contact
  FrictionParams friction;
  Pose2 scene_transform;
  double speed = 0.0;        // mm/s
  double angle_deg = 0.0;    // push angle relative to the inward normal
  double contact_frac = 0.0; // target boundary fraction of the push
  bool no_contact_push = false;

  Twist2 label() const { return twist_between(pose_before, pose_after); }
};

struct Trajectory {
  std::vector<SceneState> states;     // substeps + 1 entries
  std::vector<std::uint8_t> contact;  // contact indicator before each substep
};

/// Substep count for a horizon at a given rate (at least 1).
int default_substeps(double horizon, double rate);

/// Quasi-static rollout. The pusher advances by u / substeps per step; the
/// object moves by the model twist whenever the pusher touches it. Residual
/// penetration is resolved by moving the object along the contact normal.
/// Throws Error(Geometry) if a single step penetrates more than 1 mm.
Trajectory rollout(const SceneState& scene, const PushAction& action, int substeps);

/// Ground-truth contact annotation for a pusher position; n points into the object.
ContactInfo annotate_contact(const std::string& object_id, const Pose2& pose, const Vec2& pusher);

/// Per-shape ground-truth l (uniform-pressure mean distance), cached.
double nominal_l(const std::string& object_id);

std::uint64_t splitmix64(std::uint64_t x);
std::mt19937_64 record_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Deterministic in config (and independent of the thread count).
std::vector<DatasetRecord> generate_dataset(const GenConfig& config);

DatasetRecord inject_noise(const DatasetRecord& record, const NoiseConfig& noise, std::mt19937_64& rng);

/// Applies a planar transform to every pose, point and vector of a record
/// (the image is left as is).
DatasetRecord transform_record(const DatasetRecord& record, const Pose2& transform);

}  // namespace pushnet::sim
