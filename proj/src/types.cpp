#include "pushnet/core/types.hpp"

namespace pushnet {

double wrap_angle(double a) {
  if (!std::isfinite(a)) return a;
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

Pose2 compose(const Pose2& a, const Pose2& b) {
  const Vec2 p = a.transform_point(b.position());
  return Pose2(p.x(), p.y(), a.theta + b.theta);
}

Pose2 invert(const Pose2& a) {
  const Vec2 p = rotation(-a.theta) * (-a.position());
  return Pose2(p.x(), p.y(), -a.theta);
}

Twist2 twist_between(const Pose2& before, const Pose2& after) {
  return {after.x - before.x, after.y - before.y, wrap_angle(after.theta - before.theta)};
}

Pose2 compose_delta(const Pose2& pose, const Twist2& twist) {
  return Pose2(pose.x + twist.vx, pose.y + twist.vy, pose.theta + twist.omega);
}

}  // namespace pushnet
