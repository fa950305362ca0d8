#pragma once

#include "pushnet/core/types.hpp"
#include "pushnet/sim/scene.hpp"

#include <string>
#include <vector>

// Analytic depth rendering and pixel <-> world conversion. Pixel centres sit
// at integer coordinates; u indexes columns and v rows.
namespace pushnet::raster {

constexpr double kObjectHeight = 20.0;  // mm
constexpr double kPusherHeight = 50.0;  // mm
constexpr double kTableHalfExtent = 160.0;
constexpr double kTopDownCameraHeight = 600.0;

struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // camera-frame z in metres, row-major
  Camera camera;

  float at(int row, int col) const { return data[static_cast<size_t>(row) * width + col]; }
};

/// Orthographic camera looking straight down; the table square spans ~90% of
/// the frame.
Camera top_down_camera(int size, double table_half_extent = kTableHalfExtent);

/// Pinhole camera at `position` (mm, world) looking at `target`, with focal
/// length chosen so the table square fits into ~90% of the frame.
Camera pinhole_camera(int size, const Vec3& position, const Vec3& target = Vec3::Zero(),
                      double table_half_extent = kTableHalfExtent);

DepthImage render_depth(const sim::SceneState& scene, const Camera& camera, int width, int height);

/// Depth of the bare table at every pixel, metres.
std::vector<float> table_depth_map(const Camera& camera, int width, int height);

/// size x size patch centred on center_px; out-of-image pixels take `pad`.
std::vector<float> extract_glimpse(const std::vector<float>& image, int width, int height,
                                   const Vec2& center_px, int size, float pad = 0.0f);
std::vector<float> extract_glimpse(const DepthImage& img, const Vec2& center_px, int size);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double z_cam_m = 0.0;
};

/// Throws Error(Geometry) for pinhole points at or behind the camera plane.
Projection project(const Vec3& point_world_mm, const Camera& camera);

/// Inverse projection of a pixel with a known camera-frame depth (mm).
Vec3 unproject_depth(const Vec2& px, double depth_mm, const Camera& camera);

struct BilinearSample {
  double value = 0.0;
  double d_u = 0.0;
  double d_v = 0.0;
};

/// Bilinear interpolation of the four surrounding pixels; px must be inside
/// [0, width-1] x [0, height-1].
BilinearSample sample_bilinear(const DepthImage& img, const Vec2& px);

/// Pixel -> world point using bilinearly interpolated depth. Throws
/// Error(Geometry) when px lies outside the image.
Vec3 unproject(const Vec2& px, const DepthImage& img);

/// Intersection of the pixel ray with the horizontal plane z = plane_z (mm).
Vec2 pixel_to_plane(const Vec2& px, const Camera& camera, double plane_z);
/// Derivative of pixel_to_plane with respect to (u, v).
Mat2 pixel_to_plane_jacobian(const Vec2& px, const Camera& camera, double plane_z);

/// Writes a 16-bit binary PGM; each value is depth in units of 0.1 mm.
void write_pgm(const DepthImage& img, const std::string& path);

}  // namespace pushnet::raster
