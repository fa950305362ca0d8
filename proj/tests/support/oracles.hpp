#pragma once

// Independent reference computations shared by the unit and acceptance tests.
// Nothing here calls into the code under test except where noted.

#include "pushnet/geom/shapes.hpp"
#include "pushnet/model/pushmodel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace oracle {

using pushnet::Vec2;
using pushnet::Vec3;

/// Direct evaluation of the limit-surface stage on s * v_p.
inline Vec3 stage2(const Vec2& v_p, const Vec2& c, double s, double l) {
  const double l2 = l * l, D = l2 + c.x() * c.x() + c.y() * c.y();
  const double vx = ((l2 + c.x() * c.x()) * s * v_p.x() + c.x() * c.y() * s * v_p.y()) / D;
  const double vy = ((l2 + c.y() * c.y()) * s * v_p.y() + c.x() * c.y() * s * v_p.x()) / D;
  return Vec3(vx, vy, (c.x() * vy - c.y() * vx) / l2);
}

/// Rotation by +angle written out by hand.
inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return Vec2(c * v.x() - s * v.y(), s * v.x() + c * v.y());
}

/// A random model input whose contact normal faces the push (u . n > 0).
struct ModelInput {
  pushnet::ContactInfo contact;
  Vec2 object = Vec2::Zero();
  pushnet::PushAction action;
  pushnet::FrictionParams friction;
};

inline ModelInput random_input(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0), ang(-M_PI, M_PI), pos(-100.0, 100.0);
  ModelInput in;
  in.object = Vec2(pos(rng), pos(rng));
  const double r = 5.0 + 75.0 * unit(rng);
  in.contact.c = in.object + rotate(Vec2(r, 0.0), ang(rng));
  const double normal_angle = ang(rng);
  in.contact.n = rotate(Vec2(1.0, 0.0), normal_angle);
  // push within 80 degrees of the normal
  const double push_angle = normal_angle + (unit(rng) * 2.0 - 1.0) * 80.0 * M_PI / 180.0;
  in.action.u = rotate(Vec2(1.0 + 24.0 * unit(rng), 0.0), push_angle);
  in.action.p = in.contact.c - in.action.u;
  in.contact.s = 0.05 + 0.95 * unit(rng);
  in.friction.mu = 1.2 * unit(rng);
  in.friction.l = 10.0 + 70.0 * unit(rng);
  return in;
}

/// The eight scalar inputs the Jacobians cover: c (2), n (2), s, u (2), l.
inline std::array<double, 8> pack(const ModelInput& in) {
  return {in.contact.c.x(), in.contact.c.y(), in.contact.n.x(), in.contact.n.y(),
          in.contact.s,     in.action.u.x(),  in.action.u.y(),  in.friction.l};
}

inline ModelInput unpack(const ModelInput& base, const std::array<double, 8>& x) {
  ModelInput in = base;
  in.contact.c = Vec2(x[0], x[1]);
  in.contact.n = Vec2(x[2], x[3]);
  in.contact.s = x[4];
  in.action.u = Vec2(x[5], x[6]);
  in.friction.l = x[7];
  return in;
}

inline double input_scale(int k, const std::array<double, 8>& x) {
  if (k == 0 || k == 1) return std::max(1.0, std::hypot(x[0], x[1]));
  if (k == 5 || k == 6) return std::max(1.0, std::hypot(x[5], x[6]));
  return std::max(1.0, std::abs(x[k]));
}

inline double rel_error(double analytic, double numeric, double abs_floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), abs_floor});
}

/// Worst relative error between the analytic Jacobians and central differences
/// of predict (step 1e-4 of each input's scale). Returns a negative value when
/// a perturbation changes the contact mode, i.e. the point is not interior.
inline double jacobian_error(const ModelInput& in, double abs_floor = 1e-7) {
  namespace m = pushnet::model;
  const auto g = m::predict_with_grad(in.contact, in.object, in.action, in.friction);
  Eigen::Matrix<double, 3, 8> J;
  J.block<3, 2>(0, 0) = g.jac.d_c;
  J.block<3, 2>(0, 2) = g.jac.d_n;
  J.col(4) = g.jac.d_s;
  J.block<3, 2>(0, 5) = g.jac.d_u;
  J.col(7) = g.jac.d_l;

  const auto x0 = pack(in);
  double worst = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double h = 1e-4 * input_scale(k, x0);
    auto xp = x0, xm = x0;
    xp[k] += h;
    xm[k] -= h;
    const auto ip = unpack(in, xp), im = unpack(in, xm);
    const auto fp = m::predict(ip.contact, ip.object, ip.action, ip.friction);
    const auto fm = m::predict(im.contact, im.object, im.action, im.friction);
    if (fp.mode != g.mode || fm.mode != g.mode) return -1.0;
    const Vec3 d = (Vec3(fp.twist.vx, fp.twist.vy, fp.twist.omega) -
                    Vec3(fm.twist.vx, fm.twist.vy, fm.twist.omega)) / (2.0 * h);
    for (int r = 0; r < 3; ++r) worst = std::max(worst, rel_error(J(r, k), d[r], abs_floor));
  }
  return worst;
}

/// Residuals of the model invariants at one input; each should be ~0.
struct InvariantResiduals {
  double homogeneity = 0.0;        // predict(2u) - 2 predict(u), plus a mode change penalty
  double velocity_reproduction = 0.0;  // v_o + omega k x c' - s v_p
  double rotation = 0.0;           // rotated scene vs rotated prediction
  double mirror = 0.0;             // reflected scene vs reflected prediction
  double s_linearity = 0.0;        // predict(s) - s predict(1)
  double central = 0.0;            // |omega| with c' = 0
};

inline Vec3 as_vec(const pushnet::Twist2& t) { return Vec3(t.vx, t.vy, t.omega); }

inline Vec2 reflect(const Vec2& v) { return Vec2(v.x(), -v.y()); }

inline InvariantResiduals invariant_residuals(const ModelInput& in, double theta) {
  namespace m = pushnet::model;
  InvariantResiduals r;
  const auto base = m::predict(in.contact, in.object, in.action, in.friction);
  const Vec3 v = as_vec(base.twist);

  ModelInput dbl = in;
  dbl.action.u *= 2.0;
  const auto p2 = m::predict(dbl.contact, dbl.object, dbl.action, dbl.friction);
  r.homogeneity = (as_vec(p2.twist) - 2.0 * v).norm() + (p2.mode != base.mode ? 1.0 : 0.0);

  const Vec2 c_rel = in.contact.c - in.object;
  const Vec2 v_p = m::effective_push_velocity(in.action.u, c_rel, in.contact.n, in.friction).v_p;
  const Vec2 contact_velocity = Vec2(v.x(), v.y()) + v.z() * Vec2(-c_rel.y(), c_rel.x());
  r.velocity_reproduction = (contact_velocity - in.contact.s * v_p).norm();

  ModelInput rot = in;
  rot.contact.c = rotate(in.contact.c, theta);
  rot.contact.n = rotate(in.contact.n, theta);
  rot.object = rotate(in.object, theta);
  rot.action.u = rotate(in.action.u, theta);
  rot.action.p = rotate(in.action.p, theta);
  const Vec3 vr = as_vec(m::predict(rot.contact, rot.object, rot.action, rot.friction).twist);
  const Vec2 expect_lin = rotate(Vec2(v.x(), v.y()), theta);
  r.rotation = std::max((Vec2(vr.x(), vr.y()) - expect_lin).norm(), std::abs(vr.z() - v.z()));

  ModelInput mir = in;
  mir.contact.c = reflect(in.contact.c);
  mir.contact.n = reflect(in.contact.n);
  mir.object = reflect(in.object);
  mir.action.u = reflect(in.action.u);
  mir.action.p = reflect(in.action.p);
  const Vec3 vm = as_vec(m::predict(mir.contact, mir.object, mir.action, mir.friction).twist);
  r.mirror = std::max((Vec2(vm.x(), vm.y()) - reflect(Vec2(v.x(), v.y()))).norm(), std::abs(vm.z() + v.z()));

  ModelInput one = in;
  one.contact.s = 1.0;
  const Vec3 v1 = as_vec(m::predict(one.contact, one.object, one.action, one.friction).twist);
  r.s_linearity = (v - in.contact.s * v1).norm();

  ModelInput central = in;
  central.contact.c = in.object;
  r.central = std::abs(m::predict(central.contact, central.object, central.action, central.friction).twist.omega);
  return r;
}

/// Closest boundary point of a polygon by scanning every edge in the local frame.
struct BruteClosest {
  Vec2 c;
  double distance;  // unsigned
};

inline BruteClosest polygon_closest(const std::vector<Vec2>& verts, const pushnet::Pose2& pose, const Vec2& q_world) {
  const Vec2 q = pose.inverse_transform_point(q_world);
  BruteClosest best{Vec2::Zero(), std::numeric_limits<double>::infinity()};
  for (size_t i = 0; i < verts.size(); ++i) {
    const Vec2 a = verts[i], b = verts[(i + 1) % verts.size()];
    const Vec2 ab = b - a;
    const double t = std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec2 p = a + t * ab;
    const double d = (q - p).norm();
    if (d < best.distance) best = {p, d};
  }
  best.c = pose.transform_point(best.c);
  return best;
}

/// Even-odd point-in-polygon test.
inline bool polygon_contains(const std::vector<Vec2>& verts, const Vec2& q) {
  bool in = false;
  for (size_t i = 0, j = verts.size() - 1; i < verts.size(); j = i++) {
    const Vec2& a = verts[i];
    const Vec2& b = verts[j];
    if ((a.y() > q.y()) != (b.y() > q.y()) && q.x() < (b.x() - a.x()) * (q.y() - a.y()) / (b.y() - a.y()) + a.x())
      in = !in;
  }
  return in;
}

}  // namespace oracle
