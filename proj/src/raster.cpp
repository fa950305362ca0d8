#include "pushnet/raster/raster.hpp"

#include "pushnet/core/error.hpp"
#include "pushnet/geom/shapes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>

namespace pushnet::raster {

namespace {

constexpr double kFarDepthMm = 10000.0;
constexpr double kNoHit = std::numeric_limits<double>::infinity();

struct Ray {
  Vec3 origin;  // world, mm
  Vec3 dir;     // world; camera-frame z component of dir is 1
};

struct RayDerivative {
  Vec3 d_origin;
  Vec3 d_dir;
};

Ray pixel_ray(const Vec2& px, const Camera& cam) {
  const double x = (px.x() - cam.center.x()) / cam.focal;
  const double y = (px.y() - cam.center.y()) / cam.focal;
  const Mat3 Rt = cam.extrinsic.R.transpose();
  Vec3 o_c, d_c;
  if (cam.mode == CameraMode::Pinhole) {
    o_c = Vec3::Zero();
    d_c = Vec3(x, y, 1.0);
  } else {
    o_c = Vec3(x, y, 0.0);
    d_c = Vec3(0.0, 0.0, 1.0);
  }
  return {Rt * (o_c - cam.extrinsic.t), Rt * d_c};
}

// d ray / d pixel coordinate `axis` (0 = u, 1 = v).
RayDerivative pixel_ray_derivative(int axis, const Camera& cam) {
  const Vec3 e = cam.extrinsic.R.transpose().col(axis) / cam.focal;
  if (cam.mode == CameraMode::Pinhole) return {Vec3::Zero(), e};
  return {e, Vec3::Zero()};
}

double hit_plane(const Ray& ray, double z) {
  if (std::abs(ray.dir.z()) < 1e-12) return kNoHit;
  const double lambda = (z - ray.origin.z()) / ray.dir.z();
  return lambda > 0.0 ? lambda : kNoHit;
}

// Smallest positive root of a t^2 + b t + c = 0, or kNoHit.
double smallest_positive_root(double a, double b, double c) {
  if (std::abs(a) < 1e-15) return kNoHit;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return kNoHit;
  const double sq = std::sqrt(disc);
  const double t0 = (-b - sq) / (2.0 * a);
  const double t1 = (-b + sq) / (2.0 * a);
  if (t0 > 0.0) return t0;
  if (t1 > 0.0) return t1;
  return kNoHit;
}

// Ray against a vertical prism with footprint `shape` at `pose`, from z = 0 to
// z = height. Works in the footprint's local frame.
double hit_prism(const Ray& ray, const geom::ShapeSpec& shape, const Pose2& pose, double height) {
  double best = kNoHit;
  const double top = hit_plane(ray, height);
  if (top < kNoHit) {
    const Vec3 p = ray.origin + top * ray.dir;
    if (shape.contains(pose.inverse_transform_point(p.head<2>()))) best = top;
  }

  const Vec2 o = pose.inverse_transform_point(ray.origin.head<2>());
  const Vec2 d = pose.inverse_transform_vector(ray.dir.head<2>());
  if (d.squaredNorm() < 1e-24) return best;

  auto consider_side = [&](double lambda) {
    if (!(lambda < best)) return;
    const double z = ray.origin.z() + lambda * ray.dir.z();
    if (z >= 0.0 && z <= height) best = lambda;
  };

  if (shape.is_polygon()) {
    const auto& v = shape.polygon().vertices;
    for (size_t i = 0; i < v.size(); ++i) {
      const Vec2& a = v[i];
      const Vec2 e = v[(i + 1) % v.size()] - a;
      const double den = cross2(d, e);
      if (std::abs(den) < 1e-15) continue;
      const Vec2 ao = a - o;
      const double lambda = cross2(ao, e) / den;
      const double t = cross2(ao, d) / den;
      if (lambda > 0.0 && t >= 0.0 && t <= 1.0) consider_side(lambda);
    }
  } else {
    const auto& el = shape.ellipse();
    const double ia2 = 1.0 / (el.a * el.a), ib2 = 1.0 / (el.b * el.b);
    const double qa = d.x() * d.x() * ia2 + d.y() * d.y() * ib2;
    const double qb = 2.0 * (o.x() * d.x() * ia2 + o.y() * d.y() * ib2);
    const double qc = o.x() * o.x() * ia2 + o.y() * o.y() * ib2 - 1.0;
    consider_side(smallest_positive_root(qa, qb, qc));
  }
  return best;
}

double hit_cylinder(const Ray& ray, const Vec2& center, double radius, double height) {
  double best = kNoHit;
  const double top = hit_plane(ray, height);
  if (top < kNoHit) {
    const Vec3 p = ray.origin + top * ray.dir;
    if ((p.head<2>() - center).squaredNorm() <= radius * radius) best = top;
  }
  const Vec2 o = ray.origin.head<2>() - center;
  const Vec2 d = ray.dir.head<2>();
  const double lambda =
      smallest_positive_root(d.squaredNorm(), 2.0 * o.dot(d), o.squaredNorm() - radius * radius);
  if (lambda < best) {
    const double z = ray.origin.z() + lambda * ray.dir.z();
    if (z >= 0.0 && z <= height) best = lambda;
  }
  return best;
}

double table_depth_mm(const Ray& ray) {
  const double t = hit_plane(ray, 0.0);
  return t < kNoHit ? t : kFarDepthMm;
}

}  // namespace

Camera top_down_camera(int size, double table_half_extent) {
  if (size < 2) fail(ErrorKind::InvalidArgument, "camera: image size must be >= 2");
  Camera cam;
  cam.mode = CameraMode::TopDown;
  cam.focal = 0.9 * size / (2.0 * table_half_extent);
  cam.center = Vec2::Constant(0.5 * (size - 1));
  cam.extrinsic.R = Vec3(1.0, -1.0, -1.0).asDiagonal();
  cam.extrinsic.t = Vec3(0.0, 0.0, kTopDownCameraHeight);
  return cam;
}

Camera pinhole_camera(int size, const Vec3& position, const Vec3& target,
                      double table_half_extent) {
  if (size < 2) fail(ErrorKind::InvalidArgument, "camera: image size must be >= 2");
  const Vec3 z = (target - position).normalized();
  Vec3 x = z.cross(Vec3::UnitZ());
  if (x.norm() < 1e-9) x = Vec3::UnitX();  // looking straight down
  x.normalize();
  const Vec3 y = z.cross(x);

  Camera cam;
  cam.mode = CameraMode::Pinhole;
  cam.center = Vec2::Constant(0.5 * (size - 1));
  cam.extrinsic.R.row(0) = x.transpose();
  cam.extrinsic.R.row(1) = y.transpose();
  cam.extrinsic.R.row(2) = z.transpose();
  cam.extrinsic.t = -(cam.extrinsic.R * position);

  double extent = 0.0;
  for (double sx : {-1.0, 1.0}) {
    for (double sy : {-1.0, 1.0}) {
      const Vec3 pc = cam.extrinsic.apply(Vec3(sx * table_half_extent, sy * table_half_extent, 0.0));
      if (pc.z() <= 0.0) fail(ErrorKind::Geometry, "camera: table corner behind the camera");
      extent = std::max({extent, std::abs(pc.x() / pc.z()), std::abs(pc.y() / pc.z())});
    }
  }
  cam.focal = 0.9 * 0.5 * size / extent;
  return cam;
}

DepthImage render_depth(const sim::SceneState& scene, const Camera& camera, int width, int height) {
  if (width < 2 || height < 2) fail(ErrorKind::InvalidArgument, "render: image too small");
  const geom::ShapeSpec* shape = scene.object_id.empty() ? nullptr : &geom::shape_for(scene.object_id);

  DepthImage img;
  img.width = width;
  img.height = height;
  img.camera = camera;
  img.data.resize(static_cast<size_t>(width) * height);

#pragma omp parallel for schedule(static)
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      const Ray ray = pixel_ray(Vec2(col, row), camera);
      double depth = table_depth_mm(ray);
      if (shape) depth = std::min(depth, hit_prism(ray, *shape, scene.object_pose, kObjectHeight));
      depth = std::min(depth, hit_cylinder(ray, scene.pusher_pos, geom::kPusherRadius, kPusherHeight));
      img.data[static_cast<size_t>(row) * width + col] = static_cast<float>(depth * 1e-3);
    }
  }
  return img;
}

std::vector<float> table_depth_map(const Camera& camera, int width, int height) {
  std::vector<float> out(static_cast<size_t>(width) * height);
  for (int row = 0; row < height; ++row)
    for (int col = 0; col < width; ++col)
      out[static_cast<size_t>(row) * width + col] =
          static_cast<float>(table_depth_mm(pixel_ray(Vec2(col, row), camera)) * 1e-3);
  return out;
}

std::vector<float> extract_glimpse(const std::vector<float>& image, int width, int height,
                                   const Vec2& center_px, int size, float pad) {
  if (size <= 0 || size % 2 != 0) fail(ErrorKind::InvalidArgument, "glimpse: size must be even");
  const int col0 = static_cast<int>(std::floor(center_px.x() + 0.5)) - size / 2;
  const int row0 = static_cast<int>(std::floor(center_px.y() + 0.5)) - size / 2;
  std::vector<float> out(static_cast<size_t>(size) * size, pad);
  for (int r = 0; r < size; ++r) {
    const int src_r = row0 + r;
    if (src_r < 0 || src_r >= height) continue;
    for (int c = 0; c < size; ++c) {
      const int src_c = col0 + c;
      if (src_c < 0 || src_c >= width) continue;
      out[static_cast<size_t>(r) * size + c] = image[static_cast<size_t>(src_r) * width + src_c];
    }
  }
  return out;
}

std::vector<float> extract_glimpse(const DepthImage& img, const Vec2& center_px, int size) {
  return extract_glimpse(img.data, img.width, img.height, center_px, size, 0.0f);
}

Projection project(const Vec3& point_world_mm, const Camera& camera) {
  const Vec3 pc = camera.extrinsic.apply(point_world_mm);
  if (camera.mode == CameraMode::Pinhole) {
    if (pc.z() <= 0.0) fail(ErrorKind::Geometry, "project: point behind the camera");
    return {camera.focal * pc.x() / pc.z() + camera.center.x(),
            camera.focal * pc.y() / pc.z() + camera.center.y(), pc.z() * 1e-3};
  }
  return {camera.focal * pc.x() + camera.center.x(), camera.focal * pc.y() + camera.center.y(),
          pc.z() * 1e-3};
}

Vec3 unproject_depth(const Vec2& px, double depth_mm, const Camera& camera) {
  double x = (px.x() - camera.center.x()) / camera.focal;
  double y = (px.y() - camera.center.y()) / camera.focal;
  if (camera.mode == CameraMode::Pinhole) {
    x *= depth_mm;
    y *= depth_mm;
  }
  return camera.extrinsic.inverse().apply(Vec3(x, y, depth_mm));
}

BilinearSample sample_bilinear(const DepthImage& img, const Vec2& px) {
  const double u = px.x(), v = px.y();
  if (!(u >= 0.0 && v >= 0.0 && u <= img.width - 1 && v <= img.height - 1))
    fail(ErrorKind::Geometry, "unproject: pixel outside the image");
  const int c0 = std::min(static_cast<int>(std::floor(u)), img.width - 2);
  const int r0 = std::min(static_cast<int>(std::floor(v)), img.height - 2);
  const double a = u - c0, b = v - r0;
  const double z00 = img.at(r0, c0), z01 = img.at(r0, c0 + 1);
  const double z10 = img.at(r0 + 1, c0), z11 = img.at(r0 + 1, c0 + 1);
  BilinearSample s;
  s.value = (1 - b) * ((1 - a) * z00 + a * z01) + b * ((1 - a) * z10 + a * z11);
  s.d_u = (1 - b) * (z01 - z00) + b * (z11 - z10);
  s.d_v = (1 - a) * (z10 - z00) + a * (z11 - z01);
  return s;
}

Vec3 unproject(const Vec2& px, const DepthImage& img) {
  return unproject_depth(px, sample_bilinear(img, px).value * 1e3, img.camera);
}

Vec2 pixel_to_plane(const Vec2& px, const Camera& camera, double plane_z) {
  const Ray ray = pixel_ray(px, camera);
  if (std::abs(ray.dir.z()) < 1e-12) fail(ErrorKind::Geometry, "pixel ray parallel to the table");
  const double lambda = (plane_z - ray.origin.z()) / ray.dir.z();
  return (ray.origin + lambda * ray.dir).head<2>();
}

Mat2 pixel_to_plane_jacobian(const Vec2& px, const Camera& camera, double plane_z) {
  const Ray ray = pixel_ray(px, camera);
  if (std::abs(ray.dir.z()) < 1e-12) fail(ErrorKind::Geometry, "pixel ray parallel to the table");
  const double lambda = (plane_z - ray.origin.z()) / ray.dir.z();
  Mat2 J;
  for (int axis = 0; axis < 2; ++axis) {
    const RayDerivative d = pixel_ray_derivative(axis, camera);
    const double d_lambda = -(d.d_origin.z() + lambda * d.d_dir.z()) / ray.dir.z();
    J.col(axis) = (d.d_origin + lambda * d.d_dir + d_lambda * ray.dir).head<2>();
  }
  return J;
}

void write_pgm(const DepthImage& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path);
  out << "P5\n" << img.width << ' ' << img.height << "\n65535\n";
  for (float d : img.data) {
    const double scaled = std::clamp(std::round(static_cast<double>(d) * 1e4), 0.0, 65535.0);
    const auto v = static_cast<std::uint16_t>(scaled);
    const std::array<char, 2> be{static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(be.data(), 2);
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

}  // namespace pushnet::raster
