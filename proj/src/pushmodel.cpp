#include "pushnet/model/pushmodel.hpp"

#include "pushnet/core/error.hpp"

#include <cmath>
#include <string>

namespace pushnet::model {

namespace {

constexpr double kDenominatorGuard = 1e-12;

const Mat2 kPerpJacobian = (Mat2() << 0.0, -1.0, 1.0, 0.0).finished();  // d perp(c) / dc

bool has_normal(const Vec2& n) { return n.squaredNorm() > 0.0; }

double cosine(const Vec2& a, const Vec2& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return -2.0;
  return a.dot(b) / (na * nb);
}

}  // namespace

Stage2Result stage2_with_grad(const Vec2& q, const Vec2& c, double l) {
  const double l2 = l * l;
  const double cx = c.x(), cy = c.y();
  const double D = l2 + cx * cx + cy * cy;
  const double Nx = (l2 + cx * cx) * q.x() + cx * cy * q.y();
  const double Ny = (l2 + cy * cy) * q.y() + cx * cy * q.x();
  const double vx = Nx / D;
  const double vy = Ny / D;
  const double w = (cx * vy - cy * vx) / l2;

  Stage2Result r;
  r.twist = {vx, vy, w};

  const Eigen::RowVector2d dvx_dq(l2 + cx * cx, cx * cy);
  const Eigen::RowVector2d dvy_dq(cx * cy, l2 + cy * cy);
  r.d_q.row(0) = dvx_dq / D;
  r.d_q.row(1) = dvy_dq / D;
  r.d_q.row(2) = (cx * r.d_q.row(1) - cy * r.d_q.row(0)) / l2;

  const Eigen::RowVector2d dD_dc(2.0 * cx, 2.0 * cy);
  const Eigen::RowVector2d dNx_dc(2.0 * cx * q.x() + cy * q.y(), cx * q.y());
  const Eigen::RowVector2d dNy_dc(cy * q.x(), 2.0 * cy * q.y() + cx * q.x());
  const Eigen::RowVector2d dvx_dc = (dNx_dc - vx * dD_dc) / D;
  const Eigen::RowVector2d dvy_dc = (dNy_dc - vy * dD_dc) / D;
  r.d_c.row(0) = dvx_dc;
  r.d_c.row(1) = dvy_dc;
  r.d_c(2, 0) = (vy + cx * dvy_dc(0) - cy * dvx_dc(0)) / l2;
  r.d_c(2, 1) = (cx * dvy_dc(1) - vx - cy * dvx_dc(1)) / l2;

  const double dvx_dl = 2.0 * l * (q.x() - vx) / D;
  const double dvy_dl = 2.0 * l * (q.y() - vy) / D;
  r.d_l = Vec3(dvx_dl, dvy_dl, (cx * dvy_dl - cy * dvx_dl) / l2 - 2.0 * w / l);
  return r;
}

namespace {

// Effective push velocity plus its Jacobians w.r.t. u, n, c' and l.
struct Stage1Result {
  Vec2 v_p = Vec2::Zero();
  ContactMode mode = ContactMode::NoNormal;
  Mat2 d_u = Mat2::Zero();
  Mat2 d_n = Mat2::Zero();
  Mat2 d_c = Mat2::Zero();
  Vec2 d_l = Vec2::Zero();
};

Stage1Result stage1_with_grad(const Vec2& u, const Vec2& c, const Vec2& n,
                              const FrictionParams& friction) {
  Stage1Result r;
  if (!has_normal(n)) {
    r.mode = ContactMode::NoNormal;
    return r;
  }
  const double a = u.dot(n);
  if (a <= 0.0) {
    r.mode = ContactMode::Separating;
    return r;
  }

  const MotionCone cone = motion_cone(c, n, friction);
  const double cone_orientation = cross2(cone.v_left, cone.v_right);
  bool inside;
  if (cone_orientation >= 0.0) {
    inside = cross2(cone.v_left, u) >= 0.0 && cross2(u, cone.v_right) >= 0.0;
  } else {
    inside = cross2(cone.v_left, u) == 0.0 && cone.v_left.dot(u) > 0.0;
  }
  if (inside) {
    r.mode = ContactMode::Sticking;
    r.v_p = u;
    r.d_u = Mat2::Identity();
    return r;
  }

  const bool left = cosine(u, cone.v_left) > cosine(u, cone.v_right);
  r.mode = left ? ContactMode::SlidingLeft : ContactMode::SlidingRight;
  const Vec2& v_b = left ? cone.v_left : cone.v_right;
  const Vec2& f_b = left ? cone.f_left : cone.f_right;
  const double m_b = left ? cone.m_left : cone.m_right;
  const double b = v_b.dot(n);
  if (std::abs(b) < kDenominatorGuard) return r;

  const double alpha = std::atan(friction.mu);
  const Mat2 R_b = rotation(left ? -alpha : alpha);
  const double l = friction.l;
  const Vec2 w = perp(c);
  const Mat2 A = l * l * Mat2::Identity() + w * w.transpose();
  const Mat2 dvb_dn = A * R_b;
  const Mat2 dvb_dc = (w * f_b.transpose() + m_b * Mat2::Identity()) * kPerpJacobian;
  const Vec2 dvb_dl = 2.0 * l * f_b;

  const double g = a / b;
  r.v_p = g * v_b;

  const double inv_b = 1.0 / b;
  const double a_over_b2 = a / (b * b);
  r.d_u = v_b * n.transpose() * inv_b;
  const Eigen::RowVector2d db_dn = v_b.transpose() + n.transpose() * dvb_dn;
  r.d_n = v_b * (u.transpose() * inv_b - a_over_b2 * db_dn) + g * dvb_dn;
  r.d_c = v_b * (-a_over_b2 * (n.transpose() * dvb_dc)) + g * dvb_dc;
  r.d_l = v_b * (-a_over_b2 * n.dot(dvb_dl)) + g * dvb_dl;
  return r;
}

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) fail(ErrorKind::NonFinite, std::string("pushmodel: non-finite ") + what);
}

void validate(const ContactInfo& contact, const Vec2& object_pos, const PushAction& action,
              const FrictionParams& friction) {
  require_finite(contact.c.x() + contact.c.y(), "contact point");
  require_finite(contact.n.x() + contact.n.y(), "normal");
  require_finite(contact.s, "contact indicator");
  require_finite(object_pos.x() + object_pos.y(), "object position");
  require_finite(action.u.x() + action.u.y(), "action");
  require_finite(friction.mu, "mu");
  require_finite(friction.l, "l");
  if (friction.l <= 0.0) fail(ErrorKind::InvalidArgument, "pushmodel: l must be positive");
  if (friction.mu < 0.0) fail(ErrorKind::InvalidArgument, "pushmodel: mu must be non-negative");
}

}  // namespace

std::string_view to_string(ContactMode mode) {
  switch (mode) {
    case ContactMode::Sticking: return "sticking";
    case ContactMode::SlidingLeft: return "sliding-left";
    case ContactMode::SlidingRight: return "sliding-right";
    case ContactMode::NoNormal: return "no-normal";
    case ContactMode::Separating: return "separating";
  }
  return "unknown";
}

FrictionCone friction_cone(const Vec2& n, double mu) {
  FrictionCone cone;
  cone.alpha = std::atan(mu);
  cone.f_left = rotation(-cone.alpha) * n;
  cone.f_right = rotation(cone.alpha) * n;
  return cone;
}

double boundary_torque(const Vec2& c_rel, const Vec2& f) {
  return c_rel.x() * f.y() - c_rel.y() * f.x();
}

MotionCone motion_cone(const Vec2& c_rel, const Vec2& n, const FrictionParams& friction) {
  MotionCone mc;
  if (!has_normal(n)) return mc;
  const FrictionCone fc = friction_cone(n, friction.mu);
  const double l2 = friction.l * friction.l;
  const Vec2 k_cross_c = perp(c_rel);
  mc.f_left = fc.f_left;
  mc.f_right = fc.f_right;
  mc.m_left = boundary_torque(c_rel, fc.f_left);
  mc.m_right = boundary_torque(c_rel, fc.f_right);
  mc.v_left = l2 * fc.f_left + mc.m_left * k_cross_c;
  mc.v_right = l2 * fc.f_right + mc.m_right * k_cross_c;
  return mc;
}

EffectivePush effective_push_velocity(const Vec2& u, const Vec2& c_rel, const Vec2& n,
                                      const FrictionParams& friction) {
  const Stage1Result r = stage1_with_grad(u, c_rel, n, friction);
  return {r.v_p, r.mode};
}

Twist2 stage2(const Vec2& v_p, const Vec2& c_rel, double s, double l) {
  return stage2_with_grad(s * v_p, c_rel, l).twist;
}

PredictionWithGrad evaluate(const Vec2& c_rel, const Vec2& n, double s, const Vec2& u,
                            const FrictionParams& friction, bool with_jacobians) {
  const Stage1Result s1 = stage1_with_grad(u, c_rel, n, friction);
  const Stage2Result s2 = stage2_with_grad(s * s1.v_p, c_rel, friction.l);

  PredictionWithGrad out;
  out.twist = s2.twist;
  out.mode = s1.mode;
  if (!with_jacobians) return out;

  const Mat32 dq = s2.d_q * s;  // d twist / d v_p
  out.jac.d_u = dq * s1.d_u;
  out.jac.d_n = dq * s1.d_n;
  out.jac.d_c = s2.d_c + dq * s1.d_c;
  out.jac.d_l = s2.d_l + dq * s1.d_l;
  out.jac.d_s = s2.d_q * s1.v_p;
  return out;
}

Prediction predict(const ContactInfo& contact, const Vec2& object_pos, const PushAction& action,
                   const FrictionParams& friction) {
  validate(contact, object_pos, action, friction);
  const PredictionWithGrad r =
      evaluate(contact.c - object_pos, contact.n, contact.s, action.u, friction, false);
  return {r.twist, r.mode};
}

PredictionWithGrad predict_with_grad(const ContactInfo& contact, const Vec2& object_pos,
                                     const PushAction& action, const FrictionParams& friction) {
  validate(contact, object_pos, action, friction);
  return evaluate(contact.c - object_pos, contact.n, contact.s, action.u, friction, true);
}

}  // namespace pushnet::model
