#include "pushnet/geom/shapes.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace pushnet;
using namespace pushnet::geom;

namespace {

ShapeSpec square(double side) {
  const double h = side / 2;
  return ShapeSpec(Polygon{{Vec2(-h, -h), Vec2(h, -h), Vec2(h, h), Vec2(-h, h)}});
}

Vec2 polygon_centroid(const std::vector<Vec2>& v) {
  double a = 0;
  Vec2 c = Vec2::Zero();
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    const double w = cross2(p, q);
    a += w;
    c += w * (p + q);
  }
  return c / (3.0 * a);
}

}  // namespace

TEST_CASE("closest_boundary_point on a square") {
  const ShapeSpec sq = square(100);
  const auto r = closest_boundary_point(sq, Pose2(), Vec2(80, 0));
  CHECK((r.c - Vec2(50, 0)).norm() < 1e-12);
  CHECK((r.n - Vec2(1, 0)).norm() < 1e-12);
  CHECK(r.signed_distance == doctest::Approx(30.0));

  const auto inside = closest_boundary_point(sq, Pose2(), Vec2(0, 0));
  CHECK(inside.signed_distance == doctest::Approx(-50.0));
  CHECK(std::abs(std::max(std::abs(inside.c.x()), std::abs(inside.c.y())) - 50.0) < 1e-12);

  // the same query in a rotated and shifted frame
  const Pose2 pose(10, -5, kPi / 2);
  const auto moved = closest_boundary_point(sq, pose, pose.transform_point(Vec2(80, 0)));
  CHECK((moved.c - pose.transform_point(Vec2(50, 0))).norm() < 1e-12);
  CHECK((moved.n - Vec2(0, 1)).norm() < 1e-12);
}

TEST_CASE("circle closed form") {
  const ShapeSpec circle(Ellipse{30, 30});
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ang(-kPi, kPi), dist(31, 200);
  for (int i = 0; i < 200; ++i) {
    const double t = ang(rng), D = dist(rng);
    const Vec2 dir(std::cos(t), std::sin(t));
    const auto r = closest_boundary_point(circle, Pose2(), D * dir);
    CHECK((r.c - 30.0 * dir).norm() < 1e-9);
    CHECK((r.n - dir).norm() < 1e-9);
    CHECK(r.signed_distance == doctest::Approx(D - 30.0).epsilon(1e-12));
  }
}

TEST_CASE("polygons agree with per-edge brute force") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> q(-150, 150), ang(-kPi, kPi);
  for (const auto& [id, shape] : catalog()) {
    if (!shape.is_polygon()) continue;
    const auto& verts = shape.polygon().vertices;
    const Pose2 pose(q(rng) / 3, q(rng) / 3, ang(rng));
    double worst = 0.0;
    for (int i = 0; i < 2000; ++i) {
      const Vec2 query(q(rng), q(rng));
      const auto r = closest_boundary_point(shape, pose, query);
      const auto b = oracle::polygon_closest(verts, pose, query);
      const bool inside = oracle::polygon_contains(verts, pose.inverse_transform_point(query));
      worst = std::max(worst, std::abs(std::abs(r.signed_distance) - b.distance));
      CHECK((r.signed_distance < 0) == inside);
      if (b.distance > 1e-6) {
        // the normal is the gradient of the distance field
        const Vec2 g = (query - r.c).normalized();
        CHECK((r.n - (inside ? -g : g)).norm() < 1e-9);
      }
    }
    INFO(id);
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("ellipse normals follow the distance gradient") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> q(-150, 150);
  for (const char* id : {"ellip2", "ellip3"}) {
    const ShapeSpec& e = shape_for(id);
    const Pose2 pose(5, 5, 0.4);
    for (int i = 0; i < 500; ++i) {
      const Vec2 query(q(rng), q(rng));
      const auto r = closest_boundary_point(e, pose, query);
      const Vec2 local = pose.inverse_transform_point(r.c);
      const double a = e.ellipse().a, b = e.ellipse().b;
      CHECK(std::abs(local.x() * local.x() / (a * a) + local.y() * local.y() / (b * b) - 1.0) < 1e-9);
      if (r.signed_distance > 1e-6) CHECK((r.n - (query - r.c).normalized()).norm() < 1e-7);
      // no sampled boundary point is closer
      double best = 1e18;
      for (int k = 0; k < 720; ++k) {
        const double t = 2 * kPi * k / 720;
        best = std::min(best, (pose.transform_point(Vec2(a * std::cos(t), b * std::sin(t))) - query).norm());
      }
      CHECK(std::abs(r.signed_distance) <= best + 1e-9);
    }
  }
}

TEST_CASE("contact_indicator") {
  CHECK(contact_indicator(0.0, 0.0, 0.5) == 1);
  CHECK(contact_indicator(10.0, 4.75, 0.5) == 0);
  CHECK(contact_indicator(5.0, 4.75, 0.5) == 1);
  int prev = 1;
  for (double d = -20; d < 20; d += 0.01) {
    const int s = contact_indicator(d, kPusherRadius, kContactTolerance);
    CHECK(s <= prev);
    prev = s;
  }
}

TEST_CASE("catalog") {
  const auto& cat = catalog();
  const std::set<std::string> want = {"rect1", "rect2", "rect3", "tri1", "tri2", "tri3",
                                      "ellip1", "ellip2", "ellip3", "hex", "butter"};
  std::set<std::string> got;
  for (const auto& kv : cat) got.insert(kv.first);
  CHECK(got == want);

  CHECK(cat.at("ellip1").ellipse().a == cat.at("ellip1").ellipse().b);
  for (const char* id : {"ellip2", "ellip3"}) CHECK(cat.at(id).ellipse().a >= cat.at(id).ellipse().b);

  const auto& hex = cat.at("hex").polygon().vertices;
  REQUIRE(hex.size() == 6);
  for (size_t i = 0; i < 6; ++i) {
    CHECK(hex[i].norm() == doctest::Approx(60.5));
    CHECK((hex[(i + 1) % 6] - hex[i]).norm() == doctest::Approx(60.5));
  }

  for (const auto& [id, shape] : cat) {
    INFO(id);
    if (!shape.is_polygon()) continue;
    const auto& v = shape.polygon().vertices;
    CHECK(polygon_centroid(v).norm() < 1e-9);
    double area2 = 0;
    for (size_t i = 0; i < v.size(); ++i) area2 += cross2(v[i], v[(i + 1) % v.size()]);
    CHECK(area2 > 0);  // counter-clockwise
    CHECK(shape.area() == doctest::Approx(area2 / 2));
  }
  CHECK(shape_for("rect1").area() == doctest::Approx(90.0 * 90.0));
  CHECK_THROWS(shape_for("no-such-object"));
}

TEST_CASE("point_at_fraction walks the boundary") {
  for (const auto& [id, shape] : catalog()) {
    INFO(id);
    for (double f : {0.0, 0.1, 0.37, 0.5, 0.99}) {
      const auto bp = shape.point_at_fraction(f);
      const auto r = closest_boundary_point(shape, Pose2(), bp.point + 5.0 * bp.normal);
      CHECK(r.signed_distance == doctest::Approx(5.0).epsilon(1e-6));
      CHECK(bp.normal.norm() == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("dump_catalog lists every shape once") {
  const std::string text = dump_catalog(catalog());
  size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == catalog().size());
  CHECK(text == dump_catalog(catalog()));
  CHECK(text.find("butter") != std::string::npos);
}

TEST_CASE("uniform pressure l of a disc") {
  // mean distance from the centre over a disc of radius r is 2r/3
  CHECK(uniform_pressure_l(ShapeSpec(Ellipse{30, 30})) == doctest::Approx(20.0).epsilon(1e-3));
}
