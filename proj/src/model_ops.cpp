#include "pushnet/predictors/model_ops.hpp"

#include "pushnet/model/pushmodel.hpp"

#include <algorithm>

namespace pushnet::predictors {

namespace {

template <typename T>
Vec2 row2(const nn::Tensor<T>& t, int n) {
  return Vec2(static_cast<double>(t[2 * n]), static_cast<double>(t[2 * n + 1]));
}

template <typename T>
void add_row2(nn::Graph<T>& g, int v, int n, const Vec2& d) {
  if (!g.requires_grad(v)) return;
  auto& gr = g.grad(v);
  gr[2 * n] += static_cast<T>(d.x());
  gr[2 * n + 1] += static_cast<T>(d.y());
}

template <typename T>
void require_rows(const nn::Graph<T>& g, int v, int B, int cols, const char* what) {
  const auto& t = g.value(v);
  if (t.rank() != 2 || t.dim(0) != B || t.dim(1) != cols)
    fail(ErrorKind::InvalidArgument, std::string(what) + ": expected [" + std::to_string(B) + "," +
                                         std::to_string(cols) + "], got " + nn::shape_string(t.shape()));
}

}  // namespace

template <typename T>
int pushmodel_op(nn::Graph<T>& g, int c_rel, int n, int s, int u, int l, std::vector<double> mu) {
  const int B = g.value(c_rel).dim(0);
  require_rows(g, c_rel, B, 2, "pushmodel_op c_rel");
  require_rows(g, n, B, 2, "pushmodel_op n");
  require_rows(g, s, B, 1, "pushmodel_op s");
  require_rows(g, u, B, 2, "pushmodel_op u");
  require_rows(g, l, B, 1, "pushmodel_op l");
  if (mu.size() != static_cast<size_t>(B)) fail(ErrorKind::InvalidArgument, "pushmodel_op: mu size");

  auto jac = std::make_shared<std::vector<model::ModelJacobians>>(B);
  nn::Tensor<T> y({B, 3});
  for (int i = 0; i < B; ++i) {
    const FrictionParams fr{mu[i], static_cast<double>(g.value(l)[i])};
    const auto r = model::evaluate(row2(g.value(c_rel), i), row2(g.value(n), i),
                                   static_cast<double>(g.value(s)[i]), row2(g.value(u), i), fr, true);
    (*jac)[i] = r.jac;
    y[3 * i] = static_cast<T>(r.twist.vx);
    y[3 * i + 1] = static_cast<T>(r.twist.vy);
    y[3 * i + 2] = static_cast<T>(r.twist.omega);
  }
  return g.op(std::move(y), {c_rel, n, s, u, l}, [=](nn::Graph<T>& g, int self) {
    const auto& gy = g.grad(self);
    for (int i = 0; i < B; ++i) {
      const Vec3 go(gy[3 * i], gy[3 * i + 1], gy[3 * i + 2]);
      const model::ModelJacobians& J = (*jac)[i];
      add_row2(g, c_rel, i, J.d_c.transpose() * go);
      add_row2(g, n, i, J.d_n.transpose() * go);
      add_row2(g, u, i, J.d_u.transpose() * go);
      if (g.requires_grad(s)) g.grad(s)[i] += static_cast<T>(J.d_s.dot(go));
      if (g.requires_grad(l)) g.grad(l)[i] += static_cast<T>(J.d_l.dot(go));
    }
  });
}

template <typename T>
int stage2_op(nn::Graph<T>& g, int v_p, int c_rel, int l) {
  const int B = g.value(v_p).dim(0);
  require_rows(g, v_p, B, 2, "stage2_op v_p");
  require_rows(g, c_rel, B, 2, "stage2_op c_rel");
  require_rows(g, l, B, 1, "stage2_op l");
  auto jac = std::make_shared<std::vector<model::Stage2Result>>(B);
  nn::Tensor<T> y({B, 3});
  for (int i = 0; i < B; ++i) {
    const auto r = model::stage2_with_grad(row2(g.value(v_p), i), row2(g.value(c_rel), i),
                                           static_cast<double>(g.value(l)[i]));
    (*jac)[i] = r;
    y[3 * i] = static_cast<T>(r.twist.vx);
    y[3 * i + 1] = static_cast<T>(r.twist.vy);
    y[3 * i + 2] = static_cast<T>(r.twist.omega);
  }
  return g.op(std::move(y), {v_p, c_rel, l}, [=](nn::Graph<T>& g, int self) {
    const auto& gy = g.grad(self);
    for (int i = 0; i < B; ++i) {
      const Vec3 go(gy[3 * i], gy[3 * i + 1], gy[3 * i + 2]);
      const model::Stage2Result& J = (*jac)[i];
      add_row2(g, v_p, i, J.d_q.transpose() * go);
      add_row2(g, c_rel, i, J.d_c.transpose() * go);
      if (g.requires_grad(l)) g.grad(l)[i] += static_cast<T>(J.d_l.dot(go));
    }
  });
}

template <typename T>
int pixel_to_plane_op(nn::Graph<T>& g, int px, const Camera& camera, double plane_z) {
  const int B = g.value(px).dim(0);
  require_rows(g, px, B, 2, "pixel_to_plane_op");
  auto jac = std::make_shared<std::vector<Mat2>>(B);
  nn::Tensor<T> y({B, 2});
  for (int i = 0; i < B; ++i) {
    const Vec2 p = row2(g.value(px), i);
    const Vec2 w = raster::pixel_to_plane(p, camera, plane_z);
    (*jac)[i] = raster::pixel_to_plane_jacobian(p, camera, plane_z);
    y[2 * i] = static_cast<T>(w.x());
    y[2 * i + 1] = static_cast<T>(w.y());
  }
  return g.op(std::move(y), {px}, [=](nn::Graph<T>& g, int self) {
    const auto& gy = g.grad(self);
    for (int i = 0; i < B; ++i) add_row2(g, px, i, (*jac)[i].transpose() * row2(gy, i));
  });
}

template <typename T>
int unproject_op(nn::Graph<T>& g, int px, std::vector<const raster::DepthImage*> images) {
  const int B = g.value(px).dim(0);
  require_rows(g, px, B, 2, "unproject_op");
  if (images.size() != static_cast<size_t>(B)) fail(ErrorKind::InvalidArgument, "unproject_op: image count");
  auto jac = std::make_shared<std::vector<Mat2>>(B);
  nn::Tensor<T> y({B, 2});
  for (int i = 0; i < B; ++i) {
    const raster::DepthImage& img = *images[i];
    const Camera& cam = img.camera;
    const Vec2 raw = row2(g.value(px), i);
    if (!raw.allFinite()) fail(ErrorKind::Divergence, "unproject_op: non-finite pixel coordinate");
    const Vec2 p(std::clamp(raw.x(), 0.0, img.width - 1.0), std::clamp(raw.y(), 0.0, img.height - 1.0));
    const raster::BilinearSample z = raster::sample_bilinear(img, p);
    const double zmm = z.value * 1e3;
    const Vec3 world = raster::unproject_depth(p, zmm, cam);

    // d p_cam / d(u, v), then rotate into the world frame.
    const double x = (p.x() - cam.center.x()) / cam.focal, yv = (p.y() - cam.center.y()) / cam.focal;
    Eigen::Matrix<double, 3, 2> dpc;
    const double zu = z.d_u * 1e3, zv = z.d_v * 1e3;
    if (cam.mode == CameraMode::Pinhole) {
      dpc << zmm / cam.focal + x * zu, x * zv, yv * zu, zmm / cam.focal + yv * zv, zu, zv;
    } else {
      dpc << 1.0 / cam.focal, 0.0, 0.0, 1.0 / cam.focal, zu, zv;
    }
    Mat2 J = (cam.extrinsic.R.transpose() * dpc).topRows<2>();
    if (raw.x() != p.x()) J.col(0).setZero();
    if (raw.y() != p.y()) J.col(1).setZero();
    (*jac)[i] = J;
    y[2 * i] = static_cast<T>(world.x());
    y[2 * i + 1] = static_cast<T>(world.y());
  }
  return g.op(std::move(y), {px}, [=](nn::Graph<T>& g, int self) {
    const auto& gy = g.grad(self);
    for (int i = 0; i < B; ++i) add_row2(g, px, i, (*jac)[i].transpose() * row2(gy, i));
  });
}

#define PUSHNET_INSTANTIATE_MODEL_OPS(T)                                                          \
  template int pushmodel_op<T>(nn::Graph<T>&, int, int, int, int, int, std::vector<double>);      \
  template int stage2_op<T>(nn::Graph<T>&, int, int, int);                                        \
  template int pixel_to_plane_op<T>(nn::Graph<T>&, int, const Camera&, double);                   \
  template int unproject_op<T>(nn::Graph<T>&, int, std::vector<const raster::DepthImage*>);

PUSHNET_INSTANTIATE_MODEL_OPS(float)
PUSHNET_INSTANTIATE_MODEL_OPS(double)

}  // namespace pushnet::predictors
