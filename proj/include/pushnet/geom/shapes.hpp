#pragma once

#include "pushnet/core/types.hpp"

#include <map>
#include <string>
#include <variant>
#include <vector>

namespace pushnet::geom {

/// Simple CCW polygon with its centre of mass at the origin (mm).
struct Polygon {
  std::vector<Vec2> vertices;
};

/// Axis-aligned ellipse x^2/a^2 + y^2/b^2 = 1 with a >= b > 0 (mm).
struct Ellipse {
  double a = 1.0;
  double b = 1.0;
};

struct BoundaryPoint {
  Vec2 point;
  Vec2 normal;  // outward unit normal
};

class ShapeSpec {
 public:
  ShapeSpec() = default;
  explicit ShapeSpec(Polygon p);
  explicit ShapeSpec(Ellipse e);

  bool is_polygon() const { return std::holds_alternative<Polygon>(kind_); }
  const Polygon& polygon() const { return std::get<Polygon>(kind_); }
  const Ellipse& ellipse() const { return std::get<Ellipse>(kind_); }

  bool contains(const Vec2& local) const;
  double perimeter() const { return perimeter_; }
  double bounding_radius() const { return bounding_radius_; }
  double area() const;

  /// Boundary point at arc-length fraction f in [0, 1), starting from the
  /// first vertex (polygons) or the +x axis (ellipses), CCW.
  BoundaryPoint point_at_fraction(double f) const;

 private:
  std::variant<Polygon, Ellipse> kind_;
  double perimeter_ = 0.0;
  double bounding_radius_ = 0.0;
  std::vector<double> cumulative_;  // polygon edge arc lengths, or ellipse samples
};

struct ClosestPoint {
  Vec2 c;                  // world frame
  Vec2 n;                  // outward unit normal at c, world frame
  double signed_distance;  // negative inside
};

ClosestPoint closest_boundary_point(const ShapeSpec& shape, const Pose2& pose, const Vec2& query);

/// 1 iff signed_distance - pusher_radius <= tol.
int contact_indicator(double signed_distance, double pusher_radius, double tol);

using ObjectCatalog = std::map<std::string, ShapeSpec>;

const ObjectCatalog& catalog();
const ShapeSpec& shape_for(const std::string& object_id);

/// One record per line: id, kind, parameters.
std::string dump_catalog(const ObjectCatalog& cat);

/// Torsional-to-linear friction ratio for uniform support pressure: the mean
/// distance of the footprint from its centre of mass.
double uniform_pressure_l(const ShapeSpec& shape);

constexpr double kPusherRadius = 4.75;
constexpr double kContactTolerance = 0.5;

}  // namespace pushnet::geom
