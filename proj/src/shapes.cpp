#include "pushnet/geom/shapes.hpp"

#include "pushnet/core/error.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <limits>
#include <sstream>

namespace pushnet::geom {

namespace {

constexpr int kEllipseArcSamples = 4096;
constexpr int kEllipseNewtonIterations = 50;
constexpr double kEllipseTolerance = 1e-10;

double polygon_signed_area(const std::vector<Vec2>& v) {
  double a = 0.0;
  for (size_t i = 0; i < v.size(); ++i) a += cross2(v[i], v[(i + 1) % v.size()]);
  return 0.5 * a;
}

Vec2 polygon_centroid(const std::vector<Vec2>& v) {
  const double area = polygon_signed_area(v);
  Vec2 c = Vec2::Zero();
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec2& p = v[i];
    const Vec2& q = v[(i + 1) % v.size()];
    c += (p + q) * cross2(p, q);
  }
  return c / (6.0 * area);
}

Polygon centered(std::vector<Vec2> v) {
  if (polygon_signed_area(v) < 0.0) std::reverse(v.begin(), v.end());
  const Vec2 c = polygon_centroid(v);
  for (auto& p : v) p -= c;
  return Polygon{std::move(v)};
}

Vec2 edge_outward_normal(const Vec2& a, const Vec2& b) {
  const Vec2 d = (b - a).normalized();
  return Vec2(d.y(), -d.x());
}

struct LocalClosest {
  Vec2 c;
  Vec2 fallback_normal;
  double distance;
};

LocalClosest closest_on_polygon(const Polygon& poly, const Vec2& q) {
  const auto& v = poly.vertices;
  LocalClosest best{v[0], Vec2::UnitX(), std::numeric_limits<double>::infinity()};
  for (size_t i = 0; i < v.size(); ++i) {
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % v.size()];
    const Vec2 ab = b - a;
    const double t = std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    const Vec2 p = a + t * ab;
    const double d = (q - p).norm();
    if (d < best.distance) best = {p, edge_outward_normal(a, b), d};
  }
  return best;
}

Vec2 ellipse_point(const Ellipse& e, double t) { return Vec2(e.a * std::cos(t), e.b * std::sin(t)); }

Vec2 ellipse_normal(const Ellipse& e, const Vec2& p) {
  return Vec2(p.x() / (e.a * e.a), p.y() / (e.b * e.b)).normalized();
}

// Projected Newton on the boundary parameter, restricted to the first
// quadrant where the closest point to a first-quadrant query must lie.
double newton_quadrant(const Ellipse& e, const Vec2& q, double t) {
  constexpr double lo = 0.0, hi = kPi / 2.0;
  t = std::clamp(t, lo, hi);
  for (int it = 0; it < kEllipseNewtonIterations; ++it) {
    const double st = std::sin(t), ct = std::cos(t);
    const Vec2 r(e.a * ct - q.x(), e.b * st - q.y());
    const Vec2 d1(-e.a * st, e.b * ct);
    const Vec2 d2(-e.a * ct, -e.b * st);
    const double g = r.dot(d1);
    double h = d1.squaredNorm() + r.dot(d2);
    if (h <= 0.0) h = d1.squaredNorm();
    const double next = std::clamp(t - g / h, lo, hi);
    const double step = std::abs(next - t);
    t = next;
    if (step < kEllipseTolerance) break;
  }
  return t;
}

LocalClosest closest_on_ellipse(const Ellipse& e, const Vec2& q) {
  if (e.a == e.b) {
    const double r = q.norm();
    const Vec2 dir = r > 0.0 ? Vec2(q / r) : Vec2::UnitX();
    return {e.a * dir, dir, std::abs(r - e.a)};
  }
  const double sx = q.x() < 0.0 ? -1.0 : 1.0;
  const double sy = q.y() < 0.0 ? -1.0 : 1.0;
  const Vec2 qa(std::abs(q.x()), std::abs(q.y()));
  const double seeds[] = {std::atan2(qa.y() / e.b, qa.x() / e.a), std::atan2(qa.y(), qa.x()), 0.0,
                          kPi / 2.0};
  Vec2 best = ellipse_point(e, 0.0);
  double best_d = std::numeric_limits<double>::infinity();
  for (double seed : seeds) {
    const Vec2 p = ellipse_point(e, newton_quadrant(e, qa, seed));
    const double d = (p - qa).norm();
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  const Vec2 c(sx * best.x(), sy * best.y());
  return {c, ellipse_normal(e, c), best_d};
}

}  // namespace

ShapeSpec::ShapeSpec(Polygon p) : kind_(std::move(p)) {
  const auto& v = polygon().vertices;
  if (v.size() < 3) fail(ErrorKind::InvalidArgument, "polygon needs at least 3 vertices");
  cumulative_.push_back(0.0);
  for (size_t i = 0; i < v.size(); ++i) {
    cumulative_.push_back(cumulative_.back() + (v[(i + 1) % v.size()] - v[i]).norm());
    bounding_radius_ = std::max(bounding_radius_, v[i].norm());
  }
  perimeter_ = cumulative_.back();
}

ShapeSpec::ShapeSpec(Ellipse e) : kind_(e) {
  if (!(e.a >= e.b && e.b > 0.0)) fail(ErrorKind::InvalidArgument, "ellipse needs a >= b > 0");
  cumulative_.reserve(kEllipseArcSamples + 1);
  cumulative_.push_back(0.0);
  Vec2 prev = ellipse_point(e, 0.0);
  for (int i = 1; i <= kEllipseArcSamples; ++i) {
    const Vec2 p = ellipse_point(e, 2.0 * kPi * i / kEllipseArcSamples);
    cumulative_.push_back(cumulative_.back() + (p - prev).norm());
    prev = p;
  }
  perimeter_ = cumulative_.back();
  bounding_radius_ = e.a;
}

bool ShapeSpec::contains(const Vec2& q) const {
  if (!is_polygon()) {
    const auto& e = ellipse();
    return (q.x() * q.x()) / (e.a * e.a) + (q.y() * q.y()) / (e.b * e.b) < 1.0;
  }
  const auto& v = polygon().vertices;
  bool inside = false;
  for (size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y() > q.y()) != (v[j].y() > q.y())) {
      const double x = (v[j].x() - v[i].x()) * (q.y() - v[i].y()) / (v[j].y() - v[i].y()) + v[i].x();
      if (q.x() < x) inside = !inside;
    }
  }
  return inside;
}

double ShapeSpec::area() const {
  if (is_polygon()) return polygon_signed_area(polygon().vertices);
  return kPi * ellipse().a * ellipse().b;
}

BoundaryPoint ShapeSpec::point_at_fraction(double f) const {
  f -= std::floor(f);
  const double target = f * perimeter_;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  const size_t i = std::min<size_t>(std::max<ptrdiff_t>(it - cumulative_.begin() - 1, 0),
                                    cumulative_.size() - 2);
  const double seg = cumulative_[i + 1] - cumulative_[i];
  const double t = seg > 0.0 ? (target - cumulative_[i]) / seg : 0.0;
  if (is_polygon()) {
    const auto& v = polygon().vertices;
    const Vec2& a = v[i];
    const Vec2& b = v[(i + 1) % v.size()];
    return {a + t * (b - a), edge_outward_normal(a, b)};
  }
  const auto& e = ellipse();
  const double param = 2.0 * kPi * (static_cast<double>(i) + t) / kEllipseArcSamples;
  const Vec2 p = ellipse_point(e, param);
  return {p, ellipse_normal(e, p)};
}

ClosestPoint closest_boundary_point(const ShapeSpec& shape, const Pose2& pose, const Vec2& query) {
  const Vec2 q = pose.inverse_transform_point(query);
  const LocalClosest lc =
      shape.is_polygon() ? closest_on_polygon(shape.polygon(), q) : closest_on_ellipse(shape.ellipse(), q);
  const bool inside = shape.contains(q);
  Vec2 n_local = lc.fallback_normal;
  if (lc.distance > 1e-9) n_local = (q - lc.c) / lc.distance * (inside ? -1.0 : 1.0);
  return {pose.transform_point(lc.c), pose.transform_vector(n_local),
          inside ? -lc.distance : lc.distance};
}

int contact_indicator(double signed_distance, double pusher_radius, double tol) {
  if (!(tol > 0.0)) fail(ErrorKind::InvalidArgument, "contact tolerance must be positive");
  return signed_distance - pusher_radius <= tol ? 1 : 0;
}

namespace {

ObjectCatalog build_catalog() {
  ObjectCatalog cat;
  auto rect = [](double w, double h) {
    return centered({{-w / 2, -h / 2}, {w / 2, -h / 2}, {w / 2, h / 2}, {-w / 2, h / 2}});
  };
  auto right_triangle = [](double a, double b) { return centered({{0, 0}, {a, 0}, {0, b}}); };

  cat.emplace("rect1", ShapeSpec(rect(90.0, 90.0)));
  cat.emplace("rect2", ShapeSpec(rect(112.5, 90.0)));
  cat.emplace("rect3", ShapeSpec(rect(135.0, 90.0)));
  cat.emplace("tri1", ShapeSpec(right_triangle(112.0, 112.0)));
  cat.emplace("tri2", ShapeSpec(right_triangle(112.0, 135.0)));
  cat.emplace("tri3", ShapeSpec(right_triangle(112.0, 157.0)));
  cat.emplace("ellip1", ShapeSpec(Ellipse{52.5, 52.5}));
  cat.emplace("ellip2", ShapeSpec(Ellipse{65.4, 52.5}));
  cat.emplace("ellip3", ShapeSpec(Ellipse{78.9, 52.5}));

  std::vector<Vec2> hex;
  for (int i = 0; i < 6; ++i) hex.emplace_back(60.5 * std::cos(i * kPi / 3), 60.5 * std::sin(i * kPi / 3));
  cat.emplace("hex", ShapeSpec(centered(hex)));

  // Stick of butter seen from above: 88 x 68 mm with chamfered corners.
  const double w = 44.0, h = 34.0, k = 9.0;
  cat.emplace("butter", ShapeSpec(centered({{-w + k, -h},
                                            {w - k, -h},
                                            {w, -h + k},
                                            {w, h - k},
                                            {w - k, h},
                                            {-w + k, h},
                                            {-w, h - k},
                                            {-w, -h + k}})));
  return cat;
}

}  // namespace

const ObjectCatalog& catalog() {
  static const ObjectCatalog cat = build_catalog();
  return cat;
}

const ShapeSpec& shape_for(const std::string& object_id) {
  const auto& cat = catalog();
  const auto it = cat.find(object_id);
  if (it == cat.end()) fail(ErrorKind::InvalidArgument, "unknown object id: " + object_id);
  return it->second;
}

std::string dump_catalog(const ObjectCatalog& cat) {
  std::ostringstream out;
  for (const auto& [id, shape] : cat) {
    if (shape.is_polygon()) {
      out << id << " polygon " << shape.polygon().vertices.size();
      for (const auto& v : shape.polygon().vertices) out << fmt::format(" {:.9f} {:.9f}", v.x(), v.y());
    } else {
      out << id << fmt::format(" ellipse {:.9f} {:.9f}", shape.ellipse().a, shape.ellipse().b);
    }
    out << '\n';
  }
  return out.str();
}

double uniform_pressure_l(const ShapeSpec& shape) {
  constexpr int kGrid = 400;
  const double r = shape.bounding_radius();
  const double step = 2.0 * r / kGrid;
  double sum = 0.0;
  long count = 0;
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const Vec2 p(-r + (i + 0.5) * step, -r + (j + 0.5) * step);
      if (!shape.contains(p)) continue;
      sum += p.norm();
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

}  // namespace pushnet::geom
