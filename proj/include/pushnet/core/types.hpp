#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <numbers>

// Shared planar types. Lengths are millimetres and angles radians everywhere;
// degrees appear only at loss and metric boundaries.
namespace pushnet {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
double wrap_angle(double a);

inline double rad2deg(double r) { return r * 180.0 / kPi; }
inline double deg2rad(double d) { return d * kPi / 180.0; }

/// Counter-clockwise rotation matrix.
inline Mat2 rotation(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 r;
  r << c, -s, s, c;
  return r;
}

/// z-component of the 3D cross product of two planar vectors.
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// k x v for the unit z-axis k.
inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // always in (-pi, pi]

  Pose2() = default;
  Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  Vec2 position() const { return Vec2(x, y); }
  /// Maps a point from this pose's local frame into the parent frame.
  Vec2 transform_point(const Vec2& local) const { return rotation(theta) * local + position(); }
  Vec2 transform_vector(const Vec2& local) const { return rotation(theta) * local; }
  Vec2 inverse_transform_point(const Vec2& world) const {
    return rotation(-theta) * (world - position());
  }
  Vec2 inverse_transform_vector(const Vec2& world) const { return rotation(-theta) * world; }
};

/// Planar displacement of the object over one prediction horizon.
struct Twist2 {
  double vx = 0.0;     // mm per horizon
  double vy = 0.0;     // mm per horizon
  double omega = 0.0;  // rad per horizon

  Vec2 linear() const { return Vec2(vx, vy); }
  bool is_finite() const { return std::isfinite(vx) && std::isfinite(vy) && std::isfinite(omega); }
};

Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 invert(const Pose2& a);

/// Component-wise difference; the angular part is the shortest signed angle.
Twist2 twist_between(const Pose2& before, const Pose2& after);

/// Inverse of twist_between: adds the twist component-wise.
Pose2 compose_delta(const Pose2& pose, const Twist2& twist);

struct PushAction {
  Vec2 p = Vec2::Zero();  // pusher start, mm
  Vec2 u = Vec2::Zero();  // pusher displacement over the horizon, mm
  double horizon = 0.5;   // s

  double speed() const { return u.norm() / horizon; }
};

struct ContactInfo {
  Vec2 c = Vec2::Zero();  // contact point, world frame
  Vec2 n = Vec2::Zero();  // unit contact normal pointing into the object, or zero
  double s = 0.0;         // contact indicator in [0, 1]
};

struct FrictionParams {
  double mu = 0.25;  // pusher-object friction coefficient
  double l = 40.0;   // ratio between maximal torsional and linear friction, mm
};

/// Rigid transform x' = R x + t, in millimetres.
struct RigidTransform3 {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return R * p + t; }
  RigidTransform3 inverse() const { return {R.transpose(), -(R.transpose() * t)}; }
};

enum class CameraMode { TopDown, Pinhole };

/// In top-down mode focal is pixels per millimetre of the camera x/y axes;
/// in pinhole mode it is the focal length in pixels.
struct Camera {
  double focal = 1.0;
  Vec2 center = Vec2::Zero();
  RigidTransform3 extrinsic;  // world -> camera
  CameraMode mode = CameraMode::TopDown;
};

}  // namespace pushnet
