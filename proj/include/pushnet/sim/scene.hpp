#pragma once

#include "pushnet/core/types.hpp"

#include <string>

namespace pushnet::sim {

/// A tabletop scene with one object and the pusher.
struct SceneState {
  std::string object_id;
  Pose2 object_pose;
  Vec2 pusher_pos = Vec2::Zero();
  FrictionParams friction;
};

}  // namespace pushnet::sim
