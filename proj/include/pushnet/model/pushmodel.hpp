#pragma once

#include "pushnet/core/types.hpp"

#include <Eigen/Core>

#include <string_view>

// Quasi-static planar pushing with an ellipsoidal limit surface.
//
// Stage 1 resolves the contact mode (sticking or sliding along one motion cone
// boundary) and yields the effective push velocity v_p at the contact point.
// Stage 2 maps v_p, gated by the contact indicator s, to the object twist.
//
// Contact normals passed to this module point into the object, i.e. along the
// force the pusher can exert. A zero normal switches the model off.
namespace pushnet::model {

enum class ContactMode {
  Sticking,
  SlidingLeft,
  SlidingRight,
  NoNormal,    // |n| == 0
  Separating,  // u . n <= 0: the pusher moves away from or along the surface
};

std::string_view to_string(ContactMode mode);

struct FrictionCone {
  Vec2 f_left = Vec2::Zero();
  Vec2 f_right = Vec2::Zero();
  double alpha = 0.0;
};

/// alpha = atan(mu), f_l = R(-alpha) n, f_r = R(alpha) n.
FrictionCone friction_cone(const Vec2& n, double mu);

/// Planar cross product c' x f.
double boundary_torque(const Vec2& c_rel, const Vec2& f);

struct MotionCone {
  Vec2 v_left = Vec2::Zero();
  Vec2 v_right = Vec2::Zero();
  Vec2 f_left = Vec2::Zero();
  Vec2 f_right = Vec2::Zero();
  double m_left = 0.0;
  double m_right = 0.0;
};

/// Boundary push velocities v_pb = l^2 f_b + m_b (k x c').
MotionCone motion_cone(const Vec2& c_rel, const Vec2& n, const FrictionParams& friction);

struct EffectivePush {
  Vec2 v_p = Vec2::Zero();
  ContactMode mode = ContactMode::NoNormal;
};

EffectivePush effective_push_velocity(const Vec2& u, const Vec2& c_rel, const Vec2& n,
                                      const FrictionParams& friction);

/// Object twist for effective push velocity v_p applied at c' (s scales v_p).
Twist2 stage2(const Vec2& v_p, const Vec2& c_rel, double s, double l);

using Mat32 = Eigen::Matrix<double, 3, 2>;

struct Stage2Result {
  Twist2 twist;
  Mat32 d_q;  // with respect to q = s v_p
  Mat32 d_c;  // with respect to c', q fixed
  Vec3 d_l;   // q fixed
};

/// Stage 2 for a pre-scaled push q = s v_p, with its Jacobians.
Stage2Result stage2_with_grad(const Vec2& q, const Vec2& c_rel, double l);

struct Prediction {
  Twist2 twist;
  ContactMode mode = ContactMode::NoNormal;
};

/// Full two-stage prediction; c' = contact.c - object_pos. Throws
/// Error(NonFinite) on non-finite inputs.
Prediction predict(const ContactInfo& contact, const Vec2& object_pos, const PushAction& action,
                   const FrictionParams& friction);

/// Derivatives of (v_ox, v_oy, omega). d_c is with respect to c' (and hence c);
/// the derivative with respect to the object position is -d_c.
struct ModelJacobians {
  Mat32 d_c = Mat32::Zero();
  Mat32 d_n = Mat32::Zero();
  Vec3 d_s = Vec3::Zero();
  Mat32 d_u = Mat32::Zero();
  Vec3 d_l = Vec3::Zero();
};

struct PredictionWithGrad {
  Twist2 twist;
  ContactMode mode = ContactMode::NoNormal;
  ModelJacobians jac;
};

/// Same as predict, plus the Jacobians of the selected branch (the contact mode
/// is held fixed, so at mode switches this is the one-sided derivative).
PredictionWithGrad predict_with_grad(const ContactInfo& contact, const Vec2& object_pos,
                                     const PushAction& action, const FrictionParams& friction);

/// Raw evaluation on relative quantities, shared by the scalar API and the
/// batched network layer. Does not validate finiteness.
PredictionWithGrad evaluate(const Vec2& c_rel, const Vec2& n, double s, const Vec2& u,
                            const FrictionParams& friction, bool with_jacobians);

}  // namespace pushnet::model
