#include "pushnet/predictors/predictor.hpp"

#include "pushnet/model/pushmodel.hpp"
#include "pushnet/nn/ops.hpp"
#include "pushnet/predictors/model_ops.hpp"
#include "pushnet/raster/raster.hpp"

#include <cmath>
#include <random>

namespace pushnet::predictors {

namespace {

struct VariantName {
  Variant v;
  const char* tag;
};

constexpr VariantName kVariantNames[] = {
    {Variant::Neural, "neural"},       {Variant::Simple, "simple"},         {Variant::Hybrid, "hybrid"},
    {Variant::Error, "error"},         {Variant::ErrorGrad, "error-grad"},  {Variant::ErrorNorm, "error-norm"},
    {Variant::NeuralDyn, "neural-dyn"}, {Variant::Physics, "physics"},      {Variant::Zero, "zero"},
};

constexpr double kFeatureScale = 50.0;  // mm; positions and l entering MLPs
constexpr double kOmegaScale = 0.1;     // rad per unit of a twist head output

}  // namespace

std::string to_string(Variant v) {
  for (const auto& n : kVariantNames)
    if (n.v == v) return n.tag;
  return "unknown";
}

Variant parse_variant(const std::string& tag) {
  for (const auto& n : kVariantNames)
    if (tag == n.tag) return n.v;
  fail(ErrorKind::InvalidArgument, "unknown predictor variant '" + tag + "'");
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v = [] {
    std::vector<Variant> out;
    for (const auto& n : kVariantNames) out.push_back(n.v);
    return out;
  }();
  return v;
}

bool is_learnable(Variant v) { return v != Variant::Physics && v != Variant::Zero; }
bool has_perception(Variant v) { return is_learnable(v) && v != Variant::NeuralDyn; }
bool is_error_family(Variant v) { return v == Variant::Error || v == Variant::ErrorGrad || v == Variant::ErrorNorm; }
bool uses_ground_truth(Variant v) { return v == Variant::Physics || v == Variant::NeuralDyn; }

std::string to_string(LossKind k) { return k == LossKind::TopDown ? "2d" : "viewpoint"; }

LossKind parse_loss(const std::string& tag) {
  if (tag == "2d") return LossKind::TopDown;
  if (tag == "viewpoint") return LossKind::Viewpoint;
  fail(ErrorKind::InvalidArgument, "unknown loss '" + tag + "' (expected 2d or viewpoint)");
}

nlohmann::json arch_to_json(const ArchConfig& a) {
  return {{"glimpse", a.glimpse},
          {"position_channels", a.position_channels},
          {"glimpse_channels", a.glimpse_channels},
          {"glimpse_stride", a.glimpse_stride},
          {"mlp_width", a.mlp_width},
          {"mlp_layers", a.mlp_layers},
          {"depth_scale", a.depth_scale},
          {"contact_plane_z", a.contact_plane_z},
          {"action_scale", a.action_scale},
          {"s_bias_init", a.s_bias_init},
          {"output_gain", a.output_gain},
          {"neural_uses_mu", a.neural_uses_mu},
          {"l_factor", a.l_factor},
          {"loss", to_string(a.loss)},
          {"weight_decay", a.weight_decay},
          {"contact_weight", a.contact_weight}};
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  a.glimpse = j.value("glimpse", a.glimpse);
  a.position_channels = j.value("position_channels", a.position_channels);
  a.glimpse_channels = j.value("glimpse_channels", a.glimpse_channels);
  a.glimpse_stride = j.value("glimpse_stride", a.glimpse_stride);
  a.mlp_width = j.value("mlp_width", a.mlp_width);
  a.mlp_layers = j.value("mlp_layers", a.mlp_layers);
  a.depth_scale = j.value("depth_scale", a.depth_scale);
  a.contact_plane_z = j.value("contact_plane_z", a.contact_plane_z);
  a.action_scale = j.value("action_scale", a.action_scale);
  a.s_bias_init = j.value("s_bias_init", a.s_bias_init);
  a.output_gain = j.value("output_gain", a.output_gain);
  a.neural_uses_mu = j.value("neural_uses_mu", a.neural_uses_mu);
  a.l_factor = j.value("l_factor", a.l_factor);
  a.loss = parse_loss(j.value("loss", to_string(a.loss)));
  a.weight_decay = j.value("weight_decay", a.weight_decay);
  a.contact_weight = j.value("contact_weight", a.contact_weight);
  if (a.glimpse <= 0 || a.glimpse % 2 != 0) fail(ErrorKind::Config, "model.glimpse must be a positive even number");
  if (a.position_channels.size() != 4) fail(ErrorKind::Config, "model.position_channels needs 4 entries");
  if (a.glimpse_channels.size() != 3) fail(ErrorKind::Config, "model.glimpse_channels needs 3 entries");
  if (a.glimpse_stride < 1) fail(ErrorKind::Config, "model.glimpse_stride must be >= 1");
  if (a.mlp_width < 1 || a.mlp_layers < 1) fail(ErrorKind::Config, "model MLP sizes must be positive");
  if (!(a.l_factor > 0.0)) fail(ErrorKind::Config, "model.l_factor must be > 0");
  return a;
}

InputSpec make_input_spec(const Camera& camera, int width, int height) {
  return {camera, width, height, raster::table_depth_map(camera, width, height)};
}

Batch make_batch(const std::vector<const sim::DatasetRecord*>& records, const InputSpec& spec,
                 const ArchConfig& arch, bool need_images) {
  const int B = static_cast<int>(records.size());
  const int H = spec.height, W = spec.width, G = arch.glimpse;
  Batch b;
  b.size = B;
  if (need_images) {
    b.image = nn::Tensor<double>({B, 1, H, W});
    b.glimpse = nn::Tensor<double>({B, 1, G, G});
  }
  b.pusher_px = nn::Tensor<double>({B, 2});
  b.pusher = nn::Tensor<double>({B, 2});
  b.u = nn::Tensor<double>({B, 2});
  b.l = nn::Tensor<double>({B, 1});
  b.twist = nn::Tensor<double>({B, 3});
  b.pos = nn::Tensor<double>({B, 2});
  b.s = nn::Tensor<double>({B, 1});
  b.gt_c_rel = nn::Tensor<double>({B, 2});
  b.gt_n = nn::Tensor<double>({B, 2});
  b.gt_u = nn::Tensor<double>({B, 2});
  const size_t plane = static_cast<size_t>(H) * W;
  std::vector<float> standardized(plane);
  for (int i = 0; i < B; ++i) {
    const sim::DatasetRecord& r = *records[i];
    b.images.push_back(&r.depth);
    b.mu.push_back(r.friction.mu);
    const Vec2 p = r.action.p;
    b.pusher[2 * i] = p.x();
    b.pusher[2 * i + 1] = p.y();
    b.u[2 * i] = r.action.u.x();
    b.u[2 * i + 1] = r.action.u.y();
    b.l[i] = r.friction.l * arch.l_factor;
    const Twist2 t = r.label();
    b.twist[3 * i] = t.vx;
    b.twist[3 * i + 1] = t.vy;
    b.twist[3 * i + 2] = t.omega;
    b.pos[2 * i] = r.pose_before.x;
    b.pos[2 * i + 1] = r.pose_before.y;
    b.s[i] = r.contact_gt.s;
    const Vec2 c_rel = r.contact_gt.c - Vec2(r.pose_before.x, r.pose_before.y);
    b.gt_c_rel[2 * i] = c_rel.x();
    b.gt_c_rel[2 * i + 1] = c_rel.y();
    b.gt_n[2 * i] = r.contact_gt.n.x();
    b.gt_n[2 * i + 1] = r.contact_gt.n.y();
    b.gt_u[2 * i] = r.contact_action.u.x();
    b.gt_u[2 * i + 1] = r.contact_action.u.y();

    const raster::Projection pr = raster::project(Vec3(p.x(), p.y(), arch.contact_plane_z), spec.camera);
    if (!(pr.u >= 0.0 && pr.v >= 0.0 && pr.u <= W - 1 && pr.v <= H - 1))
      fail(ErrorKind::Geometry, "record " + std::to_string(r.id) + ": pusher projects outside the image");
    b.pusher_px[2 * i] = pr.u;
    b.pusher_px[2 * i + 1] = pr.v;
    if (!need_images) continue;
    if (r.depth.width != W || r.depth.height != H)
      fail(ErrorKind::InvalidArgument, "record " + std::to_string(r.id) + ": image size does not match the model");
    for (size_t k = 0; k < plane; ++k)
      standardized[k] = static_cast<float>((spec.table_m[k] - r.depth.data[k]) / arch.depth_scale);
    std::copy(standardized.begin(), standardized.end(), b.image.values().begin() + i * plane);
    const auto patch = raster::extract_glimpse(standardized, W, H, Vec2(pr.u, pr.v), G, 0.0f);
    std::copy(patch.begin(), patch.end(), b.glimpse.values().begin() + static_cast<size_t>(i) * G * G);
  }
  return b;
}

namespace {

// Parameter-backed layers. Every parameter node is created once per graph.
template <typename T>
struct Layers {
  nn::Graph<T>& g;
  nn::ParamStore<T>& ps;
  std::vector<int>& decay;

  int param(const std::string& name) {
    nn::Parameter<T>& p = ps.get(name);
    const int v = g.param(p);
    if (p.decay) decay.push_back(v);
    return v;
  }
  int dense(int x, const std::string& name) { return nn::dense(g, x, param(name + ".W"), param(name + ".b")); }
  int conv(int x, const std::string& name, int stride, int pad) {
    return nn::conv2d(g, x, param(name + ".W"), param(name + ".b"), stride, pad);
  }
  int deconv(int x, const std::string& name) {
    return nn::conv_transpose2d(g, x, param(name + ".W"), param(name + ".b"), 2, 1, 0);
  }
  int mlp(int x, const std::string& prefix, int layers) {
    for (int k = 0; k < layers; ++k) x = nn::relu(g, dense(x, prefix + ".fc" + std::to_string(k + 1)));
    return x;
  }
  int constant(const nn::Tensor<double>& t) { return g.constant(t.template cast<T>()); }
  int constant_rows(int B, std::vector<double> row) {
    nn::Tensor<T> t({B, static_cast<int>(row.size())});
    for (int i = 0; i < B; ++i)
      for (size_t k = 0; k < row.size(); ++k) t[i * row.size() + k] = static_cast<T>(row[k]);
    return g.constant(std::move(t));
  }
};

struct Init {
  nn::ParamStore<float>& ps;
  std::mt19937_64 rng;

  void dense(const std::string& name, int in, int out, double gain = 1.0) {
    nn::init_fan_in(ps.add(name + ".W", {out, in}, true), in, rng, gain);
    ps.add(name + ".b", {out}, false);
  }
  void conv(const std::string& name, int in, int out, int k) {
    nn::init_fan_in(ps.add(name + ".W", {out, in, k, k}, true), in * k * k, rng);
    ps.add(name + ".b", {out}, false);
  }
  void deconv(const std::string& name, int in, int out, int k, double gain = 1.0) {
    nn::init_fan_in(ps.add(name + ".W", {in, out, k, k}, true), std::max(1, in * k * k / 4), rng, gain);
    ps.add(name + ".b", {out}, false);
  }
  void mlp(const std::string& prefix, int in, int width, int layers) {
    for (int k = 0; k < layers; ++k) {
      dense(prefix + ".fc" + std::to_string(k + 1), in, width);
      in = width;
    }
  }
};

int neural_input_size(const Model& m) { return m.code_size() + 2 + 1 + 2 + (m.arch().neural_uses_mu ? 1 : 0); }

}  // namespace

Model::Model(Variant variant, ArchConfig arch, int image_size)
    : variant_(variant), arch_(std::move(arch)), image_size_(image_size) {
  if (has_perception(variant_) && (image_size_ <= 0 || image_size_ % 8 != 0))
    fail(ErrorKind::Config, "image size must be a positive multiple of 8 for the position stream");
  if (has_perception(variant_) && arch_.glimpse % (4 * arch_.glimpse_stride * arch_.glimpse_stride) != 0)
    fail(ErrorKind::Config, "glimpse size is not divisible by the glimpse stack's downsampling");
  if (arch_.loss == LossKind::Viewpoint && !(variant_ == Variant::Hybrid || is_error_family(variant_)))
    fail(ErrorKind::Config, "the viewpoint loss needs a contact head (hybrid or error variants)");
}

int Model::code_size() const {
  const int s = arch_.glimpse_stride;
  // conv(stride) -> pool -> conv(stride) -> pool -> conv(stride)
  int side = arch_.glimpse;
  side = (side + s - 1) / s / 2;
  side = (side + s - 1) / s / 2;
  side = (side + s - 1) / s;
  return arch_.glimpse_channels[2] * side * side;
}

void Model::init(nn::ParamStore<float>& params, std::uint64_t seed) const {
  if (!is_learnable(variant_)) return;
  Init in{params, std::mt19937_64(seed)};
  const int w = arch_.mlp_width, L = arch_.mlp_layers;
  const double og = arch_.output_gain;
  if (variant_ == Variant::NeuralDyn) {
    in.mlp("dyn", 8, w, L);
    in.dense("dyn.out", w, 3, og);
    return;
  }
  const auto& pc = arch_.position_channels;
  in.conv("pos.conv1", 1, pc[0], 5);
  in.conv("pos.conv2", pc[0], pc[1], 3);
  in.conv("pos.conv3", pc[1], pc[2], 3);
  in.conv("pos.conv4", pc[2], pc[3], 3);
  in.deconv("pos.deconv1", pc[3], pc[2], 4);
  in.deconv("pos.deconv2", pc[2], pc[1], 4);
  in.deconv("pos.deconv3", pc[1], 1, 4);
  const auto& gc = arch_.glimpse_channels;
  in.conv("glimpse.conv1", 1, gc[0], 3);
  in.conv("glimpse.conv2", gc[0], gc[1], 3);
  in.conv("glimpse.conv3", gc[1], gc[2], 3);
  const int code = code_size();

  switch (variant_) {
    case Variant::Neural:
      in.mlp("neural", neural_input_size(*this), w, L);
      in.dense("neural.out", w, 3, og);
      break;
    case Variant::Simple:
      in.mlp("simple", code + 2, w, L);
      in.dense("simple.vp", w, 2, og);
      in.dense("simple.c", w, 2, og);
      break;
    default:  // hybrid and error family
      in.mlp("hybrid", code + 2, w, L);
      in.dense("hybrid.c", w, 2, og);
      in.dense("hybrid.n", w, 2, 1.0);
      in.dense("hybrid.s", w, 1, og);
      params.get("hybrid.s.b").value[0] = static_cast<float>(arch_.s_bias_init);
      if (is_error_family(variant_)) {
        in.mlp("error", code + 2 + 1 + 2, w, L);
        in.dense("error.out", w, 3, og);
      }
      break;
  }
}

template <typename T>
Outputs Model::forward(nn::Graph<T>& g, nn::ParamStore<T>& ps, const Batch& b) const {
  if (!is_learnable(variant_)) fail(ErrorKind::InvalidArgument, to_string(variant_) + " has no network");
  Outputs out;
  Layers<T> L{g, ps, out.decay_params};
  const int B = b.size;
  const int layers = arch_.mlp_layers;
  const T inv_action = static_cast<T>(1.0 / arch_.action_scale);
  const T inv_feature = static_cast<T>(1.0 / kFeatureScale);
  const int twist_scale = L.constant_rows(B, {arch_.action_scale, arch_.action_scale, kOmegaScale});
  auto twist_head = [&](int h, const std::string& name) { return nn::mul(g, L.dense(h, name), twist_scale); };

  const int u = L.constant(b.u);
  const int l = L.constant(b.l);
  if (variant_ == Variant::NeuralDyn) {
    const int x = nn::concat(g, {nn::scale(g, L.constant(b.gt_c_rel), inv_feature), L.constant(b.gt_n),
                                 L.constant(b.s), nn::scale(g, L.constant(b.gt_u), inv_action),
                                 nn::scale(g, l, inv_feature)});
    out.twist = twist_head(L.mlp(x, "dyn", layers), "dyn.out");
    return out;
  }

  // Position stream: encoder-decoder to one channel, spatial softmax, then
  // pixel -> world through the depth image.
  const int img = L.constant(b.image);
  int h = nn::relu(g, L.conv(img, "pos.conv1", 2, 2));
  h = nn::relu(g, L.conv(h, "pos.conv2", 2, 1));
  h = nn::relu(g, L.conv(h, "pos.conv3", 2, 1));
  h = nn::relu(g, L.conv(h, "pos.conv4", 1, 1));
  h = nn::relu(g, L.deconv(h, "pos.deconv1"));
  h = nn::relu(g, L.deconv(h, "pos.deconv2"));
  h = L.deconv(h, "pos.deconv3");
  const int pos_px = nn::spatial_softmax(g, h);
  out.pos = unproject_op(g, pos_px, b.images);

  // Glimpse stream.
  const int st = arch_.glimpse_stride;
  int z = L.constant(b.glimpse);
  z = nn::maxpool2d(g, nn::relu(g, L.conv(z, "glimpse.conv1", st, 1)), 2);
  z = nn::maxpool2d(g, nn::relu(g, L.conv(z, "glimpse.conv2", st, 1)), 2);
  z = nn::relu(g, L.conv(z, "glimpse.conv3", st, 1));
  const int code = nn::reshape(g, z, {B, code_size()});

  const int pusher = L.constant(b.pusher);
  const int pusher_px = L.constant(b.pusher_px);
  const int u_in = nn::scale(g, u, inv_action);
  const int l_in = nn::scale(g, l, inv_feature);

  if (variant_ == Variant::Neural) {
    std::vector<int> feats = {code, u_in, l_in, nn::scale(g, nn::sub(g, out.pos, pusher), inv_feature)};
    if (arch_.neural_uses_mu) feats.push_back(L.constant(nn::Tensor<double>({B, 1}, b.mu)));
    out.twist = twist_head(L.mlp(nn::concat(g, feats), "neural", layers), "neural.out");
    return out;
  }

  const Camera& cam = b.images.empty() ? Camera{} : b.images.front()->camera;
  const std::string prefix = variant_ == Variant::Simple ? "simple" : "hybrid";
  const int trunk = L.mlp(nn::concat(g, {code, u_in}), prefix, layers);
  // Contact point as a pixel offset from the pusher, mapped onto the plane at
  // mid-object height.
  const int c_px = nn::add(g, pusher_px, nn::scale(g, L.dense(trunk, prefix + ".c"), static_cast<T>(arch_.glimpse / 4.0)));
  out.c = pixel_to_plane_op(g, c_px, cam, arch_.contact_plane_z);
  const int c_rel = nn::sub(g, out.c, out.pos);

  if (variant_ == Variant::Simple) {
    out.v_p = nn::scale(g, L.dense(trunk, "simple.vp"), static_cast<T>(arch_.action_scale));
    out.twist = stage2_op(g, out.v_p, c_rel, l);
    out.model_twist = out.twist;
    return out;
  }

  const int n_px = nn::normalize_rows(g, L.dense(trunk, "hybrid.n"));
  const int n_tip = pixel_to_plane_op(g, nn::add(g, c_px, n_px), cam, arch_.contact_plane_z);
  out.n = nn::normalize_rows(g, nn::sub(g, n_tip, out.c));
  out.s = nn::sigmoid(g, L.dense(trunk, "hybrid.s"));
  if (arch_.loss == LossKind::Viewpoint) {
    out.model_twist = pushmodel_op(g, c_rel, out.n, L.constant_rows(B, {1.0}), u, l, b.mu);
    out.twist = nn::mul_rows(g, out.model_twist, out.s);
  } else {
    out.model_twist = pushmodel_op(g, c_rel, out.n, out.s, u, l, b.mu);
    out.twist = out.model_twist;
  }
  if (!is_error_family(variant_)) return out;

  // Error branch; its inputs are cut from the gradient except in error-grad.
  const bool stop = variant_ != Variant::ErrorGrad;
  auto cut = [&](int v) { return stop ? g.stop_gradient(v) : v; };
  const int action = variant_ == Variant::ErrorNorm ? nn::normalize_rows(g, u) : u_in;
  const int rel = nn::scale(g, nn::sub(g, cut(out.pos), pusher), inv_feature);
  const int x = nn::concat(g, {cut(code), action, l_in, rel});
  out.err = twist_head(L.mlp(x, "error", layers), "error.out");
  out.twist = nn::add(g, g.stop_gradient(out.twist), out.err);
  return out;
}

template <typename T>
LossOutputs loss_2d(nn::Graph<T>& g, int twist_pred, int pos_pred, int twist_label, int pos_label) {
  LossOutputs o;
  const int pred_xy = nn::slice(g, twist_pred, 0, 2);
  const int label_xy = nn::slice(g, twist_label, 0, 2);
  o.trans = nn::mean_all(g, nn::row_norm(g, nn::sub(g, pred_xy, label_xy)));
  o.mag = nn::mean_all(g, nn::abs(g, nn::sub(g, nn::row_norm(g, pred_xy), nn::row_norm(g, label_xy))));
  o.rot = nn::scale(g, nn::mean_all(g, nn::abs(g, nn::sub(g, nn::slice(g, twist_pred, 2, 1), nn::slice(g, twist_label, 2, 1)))),
                    static_cast<T>(180.0 / kPi));
  o.total = nn::add(g, nn::add(g, o.trans, o.mag), o.rot);
  if (pos_pred >= 0) {
    o.pos = nn::mean_all(g, nn::row_norm(g, nn::sub(g, pos_pred, pos_label)));
    o.total = nn::add(g, o.total, o.pos);
  }
  return o;
}

template <typename T>
LossOutputs loss_viewpoint(nn::Graph<T>& g, int twist_pred, int s_pred, int pos_pred, int twist_label, int s_label,
                           int pos_label, double contact_weight) {
  LossOutputs o;
  const int trans_rows = nn::row_norm(g, nn::sub(g, nn::slice(g, twist_pred, 0, 2), nn::slice(g, twist_label, 0, 2)));
  const int rot_rows =
      nn::scale(g, nn::abs(g, nn::sub(g, nn::slice(g, twist_pred, 2, 1), nn::slice(g, twist_label, 2, 1))),
                static_cast<T>(180.0 / kPi));
  o.trans = nn::mean_all(g, nn::mul(g, trans_rows, s_label));
  o.rot = nn::mean_all(g, nn::mul(g, rot_rows, s_label));
  o.contact = nn::scale(g, nn::mean_all(g, nn::binary_cross_entropy(g, s_pred, s_label)), static_cast<T>(contact_weight));
  o.total = nn::add(g, nn::add(g, o.trans, o.rot), o.contact);
  if (pos_pred >= 0) {
    o.pos = nn::mean_all(g, nn::row_norm(g, nn::sub(g, pos_pred, pos_label)));
    o.total = nn::add(g, o.total, o.pos);
  }
  return o;
}

template <typename T>
LossOutputs Model::loss(nn::Graph<T>& g, const Outputs& out, const Batch& b) const {
  const int twist_label = g.constant(b.twist.template cast<T>());
  const int pos_label = out.pos >= 0 ? g.constant(b.pos.template cast<T>()) : -1;
  LossOutputs o;
  const bool viewpoint = arch_.loss == LossKind::Viewpoint;
  const int s_label = viewpoint ? g.constant(b.s.template cast<T>()) : -1;
  if (viewpoint) {
    o = loss_viewpoint(g, out.model_twist, out.s, out.pos, twist_label, s_label, pos_label, arch_.contact_weight);
  } else {
    o = loss_2d(g, is_error_family(variant_) ? out.model_twist : out.twist, out.pos, twist_label, pos_label);
  }
  if (is_error_family(variant_)) {
    // The corrected prediction is trained on its own term; the analytical
    // branch only sees it through a stop-gradient.
    const LossOutputs e = viewpoint ? loss_viewpoint(g, out.twist, out.s, -1, twist_label, s_label, -1, 0.0)
                                    : loss_2d(g, out.twist, -1, twist_label, -1);
    const int corr = viewpoint ? nn::add(g, e.trans, e.rot) : e.total;
    o.total = nn::add(g, o.total, corr);
  }
  if (!out.decay_params.empty() && arch_.weight_decay > 0.0) {
    o.decay = nn::l2_penalty(g, out.decay_params, static_cast<T>(arch_.weight_decay));
    o.total = nn::add(g, o.total, o.decay);
  }
  return o;
}

nlohmann::json Model::to_json() const {
  return {{"variant", to_string(variant_)}, {"image_size", image_size_}, {"arch", arch_to_json(arch_)}};
}

Model Model::from_json(const nlohmann::json& j) {
  try {
    return Model(parse_variant(j.at("variant").get<std::string>()), arch_from_json(j.at("arch")),
                 j.at("image_size").get<int>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("model description: ") + e.what());
  }
}

Twist2 physics_prediction(const sim::DatasetRecord& r, double l_factor) {
  FrictionParams f = r.friction;
  f.l *= l_factor;
  return model::predict(r.contact_gt, Vec2(r.pose_before.x, r.pose_before.y), r.contact_action, f).twist;
}

#define PUSHNET_INSTANTIATE_PREDICTOR(T)                                                                      \
  template Outputs Model::forward<T>(nn::Graph<T>&, nn::ParamStore<T>&, const Batch&) const;                  \
  template LossOutputs Model::loss<T>(nn::Graph<T>&, const Outputs&, const Batch&) const;                     \
  template LossOutputs loss_2d<T>(nn::Graph<T>&, int, int, int, int);                                         \
  template LossOutputs loss_viewpoint<T>(nn::Graph<T>&, int, int, int, int, int, int, double);

PUSHNET_INSTANTIATE_PREDICTOR(float)
PUSHNET_INSTANTIATE_PREDICTOR(double)

}  // namespace pushnet::predictors
