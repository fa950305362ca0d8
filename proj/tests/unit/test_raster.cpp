#include "pushnet/core/error.hpp"
#include "pushnet/geom/shapes.hpp"
#include "pushnet/raster/raster.hpp"

#include "util.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace pushnet;
using namespace pushnet::raster;

namespace {

sim::SceneState empty_scene() {
  sim::SceneState s;
  s.pusher_pos = Vec2(1e6, 1e6);
  return s;
}

std::set<float> distinct(const std::vector<float>& v) { return std::set<float>(v.begin(), v.end()); }

int count_below(const DepthImage& img, float depth) {
  int n = 0;
  for (float d : img.data) n += d < depth;
  return n;
}

const Vec3 kPinholePosition(0.0, -250.0, 400.0);

}  // namespace

TEST_CASE("empty table renders flat") {
  const Camera cam = top_down_camera(32);
  const DepthImage img = render_depth(empty_scene(), cam, 32, 32);
  const auto values = distinct(img.data);
  REQUIRE(values.size() == 1);
  CHECK(*values.begin() == doctest::Approx(kTopDownCameraHeight * 1e-3));
  CHECK(img.data == table_depth_map(cam, 32, 32));
}

TEST_CASE("top-down object pixels share one depth") {
  sim::SceneState s = empty_scene();
  s.object_id = "hex";
  s.object_pose = Pose2(10, -20, 0.3);
  const DepthImage img = render_depth(s, top_down_camera(64), 64, 64);
  const auto values = distinct(img.data);
  CHECK(values.size() == 2);
  CHECK(*values.begin() == doctest::Approx((kTopDownCameraHeight - kObjectHeight) * 1e-3));
}

TEST_CASE("rendering is bit-reproducible") {
  sim::SceneState s = empty_scene();
  s.object_id = "butter";
  s.object_pose = Pose2(-30, 15, 1.1);
  s.pusher_pos = Vec2(40, 40);
  const Camera cam = pinhole_camera(48, kPinholePosition);
  CHECK(render_depth(s, cam, 48, 48).data == render_depth(s, cam, 48, 48).data);
}

TEST_CASE("top-down projection is a scale and shift") {
  const Camera cam = top_down_camera(128);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> p(-150, 150), d(-40, 40), z(0, 50);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a(p(rng), p(rng), z(rng));
    const Vec3 delta(d(rng), d(rng), 0.0);
    const auto pa = project(a, cam), pb = project(a + delta, cam);
    CHECK(pb.u - pa.u == doctest::Approx(cam.focal * delta.x()));
    CHECK(pb.v - pa.v == doctest::Approx(-cam.focal * delta.y()));
  }
  // table spans about 90% of the frame
  const auto corner = project(Vec3(-kTableHalfExtent, kTableHalfExtent, 0), cam);
  CHECK(corner.u == doctest::Approx(0.05 * 128 - 0.5).epsilon(1e-9));
}

TEST_CASE("pinhole projection examples") {
  Camera cam;
  cam.mode = CameraMode::Pinhole;
  cam.focal = 100.0;
  cam.center = Vec2(31.5, 31.5);
  const auto c = project(Vec3(0, 0, 2), cam);
  CHECK(c.u == 31.5);
  CHECK(c.v == 31.5);
  cam.center = Vec2::Zero();
  const auto q = project(Vec3(1, 1, 2), cam);
  CHECK(q.u == doctest::Approx(50.0));
  CHECK(q.v == doctest::Approx(50.0));
  CHECK(q.z_cam_m == doctest::Approx(0.002));
  CHECK_THROWS_AS(project(Vec3(0, 0, -1), cam), Error);
  CHECK_THROWS_AS(project(Vec3(0, 0, 0), cam), Error);
}

TEST_CASE("project and unproject_depth round trip") {
  for (const Camera& cam : {top_down_camera(64), pinhole_camera(64, kPinholePosition)}) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> p(-150, 150), z(0, 50);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      const Vec3 w(p(rng), p(rng), z(rng));
      const auto pr = project(w, cam);
      const Vec3 back = unproject_depth(Vec2(pr.u, pr.v), pr.z_cam_m * 1e3, cam);
      worst = std::max(worst, (back - w).norm() * 1e-3);
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("pinhole: farther objects span fewer pixels") {
  const Camera cam = pinhole_camera(128, kPinholePosition);
  double prev = 1e9;
  for (double y = -150; y <= 150; y += 25) {
    const auto a = project(Vec3(-20, y, 0), cam), b = project(Vec3(20, y, 0), cam);
    const double len = std::hypot(b.u - a.u, b.v - a.v);
    CHECK(len < prev);
    prev = len;
  }
  sim::SceneState near = empty_scene(), far = empty_scene();
  near.object_id = far.object_id = "rect1";
  near.object_pose = Pose2(0, -90, 0);
  far.object_pose = Pose2(0, 90, 0);
  const DepthImage table = render_depth(empty_scene(), cam, 128, 128);
  auto object_pixels = [&](const DepthImage& img) {
    int n = 0;
    for (size_t i = 0; i < img.data.size(); ++i) n += img.data[i] < table.data[i] - 1e-6f;
    return n;
  };
  CHECK(object_pixels(render_depth(near, cam, 128, 128)) > object_pixels(render_depth(far, cam, 128, 128)));
}

TEST_CASE("pinhole and top-down renders differ") {
  sim::SceneState s = empty_scene();
  s.object_id = "rect2";
  const auto a = render_depth(s, top_down_camera(32), 32, 32);
  const auto b = render_depth(s, pinhole_camera(32, kPinholePosition), 32, 32);
  CHECK(a.data != b.data);
}

TEST_CASE("extract_glimpse") {
  DepthImage img;
  img.width = img.height = 8;
  for (int i = 0; i < 64; ++i) img.data.push_back(static_cast<float>(i + 1));
  CHECK(extract_glimpse(img, Vec2(3.5, 3.5), 8) == img.data);

  const auto corner = extract_glimpse(img, Vec2(0, 0), 4);
  // only the bottom-right quadrant comes from the image
  const std::vector<float> want = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 2, 0, 0, 9, 10};
  CHECK(corner == want);
  CHECK_THROWS_AS(extract_glimpse(img, Vec2(0, 0), 3), Error);
}

TEST_CASE("glimpse at a contact shows both object and pusher") {
  sim::SceneState s = empty_scene();
  s.object_id = "rect1";
  s.pusher_pos = Vec2(-45.0 - geom::kPusherRadius, 0.0);
  const Camera cam = top_down_camera(128);
  const DepthImage img = render_depth(s, cam, 128, 128);
  const auto px = project(Vec3(s.pusher_pos.x(), s.pusher_pos.y(), 0.0), cam);
  const auto g = distinct(extract_glimpse(img, Vec2(px.u, px.v), 16));
  const float obj = static_cast<float>((kTopDownCameraHeight - kObjectHeight) * 1e-3);
  const float pusher = static_cast<float>((kTopDownCameraHeight - kPusherHeight) * 1e-3);
  CHECK(g.count(obj) == 1);
  CHECK(g.count(pusher) == 1);
  CHECK(count_below(img, obj + 1e-6f) > 0);
}

TEST_CASE("unproject") {
  const Camera cam = pinhole_camera(16, kPinholePosition);
  DepthImage flat;
  flat.width = flat.height = 16;
  flat.camera = cam;
  flat.data.assign(256, 0.45f);
  for (int r = 0; r < 16; r += 3)
    for (int c = 0; c < 16; c += 5) {
      const Vec3 w = unproject(Vec2(c, r), flat);
      const auto p = project(w, cam);
      CHECK(p.u == doctest::Approx(c).epsilon(1e-12));
      CHECK(p.v == doctest::Approx(r).epsilon(1e-12));
      CHECK(p.z_cam_m == doctest::Approx(0.45f).epsilon(1e-12));
    }

  // bilinear interpolation is exact on a planar ramp (dyadic values stay exact in float)
  DepthImage ramp = flat;
  for (int r = 0; r < 16; ++r)
    for (int c = 0; c < 16; ++c) ramp.data[r * 16 + c] = 0.5f + 0.0078125f * c + 0.00390625f * r;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 15);
  for (int i = 0; i < 200; ++i) {
    const Vec2 px(u(rng), u(rng));
    CHECK(sample_bilinear(ramp, px).value == doctest::Approx(0.5 + 0.0078125 * px.x() + 0.00390625 * px.y()).epsilon(1e-12));
    CHECK(sample_bilinear(ramp, px).d_u == doctest::Approx(0.0078125));
  }

  // a pixel straddling an edge gets a depth between the two sides
  DepthImage edge = flat;
  for (int r = 0; r < 16; ++r)
    for (int c = 8; c < 16; ++c) edge.data[r * 16 + c] = 0.43f;
  const double mid = sample_bilinear(edge, Vec2(7.5, 4)).value;
  CHECK(mid < 0.45);
  CHECK(mid > 0.43);

  CHECK_THROWS_AS(unproject(Vec2(-0.5, 3), flat), Error);
  CHECK_THROWS_AS(unproject(Vec2(3, 15.01), flat), Error);
}

TEST_CASE("pixel_to_plane inverts projection and its Jacobian matches differences") {
  for (const Camera& cam : {top_down_camera(64), pinhole_camera(64, kPinholePosition)}) {
    for (double x : {-100.0, 0.0, 73.0})
      for (double y : {-60.0, 20.0}) {
        const auto p = project(Vec3(x, y, 10.0), cam);
        const Vec2 px(p.u, p.v);
        CHECK((pixel_to_plane(px, cam, 10.0) - Vec2(x, y)).norm() < 1e-9);
        const Mat2 J = pixel_to_plane_jacobian(px, cam, 10.0);
        const double h = 1e-4;
        for (int k = 0; k < 2; ++k) {
          Vec2 dp = Vec2::Zero();
          dp[k] = h;
          const Vec2 fd = (pixel_to_plane(px + dp, cam, 10.0) - pixel_to_plane(px - dp, cam, 10.0)) / (2 * h);
          CHECK((J.col(k) - fd).norm() <= 1e-6 * std::max(1.0, fd.norm()));
        }
      }
  }
}

TEST_CASE("write_pgm header and scaling") {
  testutil::TempDir dir("pgm");
  DepthImage img;
  img.width = 2;
  img.height = 1;
  img.data = {0.6f, 0.58f};
  write_pgm(img, dir.str("a.pgm"));
  const std::string bytes = testutil::read_file(dir.str("a.pgm"));
  const std::string header = "P5\n2 1\n65535\n";
  REQUIRE(bytes.size() == header.size() + 4);
  CHECK(bytes.substr(0, header.size()) == header);
  const auto b = reinterpret_cast<const unsigned char*>(bytes.data() + header.size());
  CHECK(b[0] * 256 + b[1] == 6000);
  CHECK(b[2] * 256 + b[3] == 5800);
  CHECK_THROWS_AS(write_pgm(img, dir.str("missing/a.pgm")), Error);
}
