#include "pushnet/sim/simulator.hpp"

#include "pushnet/core/error.hpp"
#include "pushnet/geom/shapes.hpp"
#include "pushnet/model/pushmodel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace pushnet::sim {

namespace {

constexpr double kMaxPenetration = 1.0;  // mm per substep
constexpr int kMaxResamples = 64;

constexpr std::uint64_t kStreamPush = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kStreamNoise = 0xd1b54a32d192ed03ULL;

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// One generated push before augmentation, in the object's canonical frame.
struct CanonicalRecord {
  DatasetRecord rec;
  std::vector<Vec2> pusher_path;  // start and end, for visibility checks
};

bool sample_contact_window(const std::string& object_id, const GenConfig& cfg,
                           std::mt19937_64& rng, CanonicalRecord& out) {
  const geom::ShapeSpec& shape = geom::shape_for(object_id);
  const double frac = cfg.contact_fracs.empty() ? uniform(rng, 0.0, 1.0) : pick(cfg.contact_fracs, rng);
  const double angle = pick(cfg.angles, rng);
  const double speed = pick(cfg.push_speeds, rng);
  const double gap = uniform(rng, 0.0, cfg.approach_gap_max);

  const geom::BoundaryPoint bp = shape.point_at_fraction(frac);
  const Vec2 dir = rotation(deg2rad(angle)) * (-bp.normal);
  SceneState scene;
  scene.object_id = object_id;
  scene.pusher_pos = bp.point + bp.normal * (geom::kPusherRadius + gap);
  scene.friction = {cfg.mu, nominal_l(object_id) * cfg.l_scale};

  // The pusher travels push_length and then rests; the object is quasi-static,
  // so the trajectory after the push ends is constant.
  const int window = default_substeps(cfg.horizon, cfg.rate);
  const int pushing = std::max(1, static_cast<int>(std::lround(cfg.push_length / speed * cfg.rate)));
  const PushAction whole{scene.pusher_pos, dir * cfg.push_length, pushing / cfg.rate};
  Trajectory traj = rollout(scene, whole, pushing);
  while (static_cast<int>(traj.contact.size()) < window) {
    traj.contact.push_back(0);
    traj.states.push_back(traj.states.back());
  }
  const int total = static_cast<int>(traj.contact.size());

  for (int attempt = 0; attempt < 8; ++attempt) {
    const int i0 = std::uniform_int_distribution<int>(0, total - window)(rng);
    int first = -1;
    for (int k = i0; k < i0 + window; ++k) {
      if (traj.contact[k]) {
        first = k;
        break;
      }
    }
    if (first < 0) continue;

    const SceneState& a = traj.states[i0];
    const SceneState& b = traj.states[i0 + window];
    const SceneState& fc = traj.states[first];
    DatasetRecord& r = out.rec;
    r.object_id = object_id;
    r.pose_before = a.object_pose;
    r.pose_after = b.object_pose;
    r.action = {a.pusher_pos, b.pusher_pos - a.pusher_pos, cfg.horizon};
    r.contact_gt = annotate_contact(object_id, fc.object_pose, fc.pusher_pos);
    r.contact_action = {fc.pusher_pos, b.pusher_pos - fc.pusher_pos, cfg.horizon};
    r.friction = scene.friction;
    r.speed = speed;
    r.angle_deg = angle;
    r.contact_frac = frac;
    r.no_contact_push = false;
    out.pusher_path = {a.pusher_pos, b.pusher_pos};
    return true;
  }
  return false;
}

void sample_no_contact(const std::string& object_id, const GenConfig& cfg, std::mt19937_64& rng,
                       CanonicalRecord& out) {
  const geom::ShapeSpec& shape = geom::shape_for(object_id);
  const double frac = cfg.contact_fracs.empty() ? uniform(rng, 0.0, 1.0) : pick(cfg.contact_fracs, rng);
  const double angle = pick(cfg.angles, rng);
  const double speed = pick(cfg.push_speeds, rng);
  const double gap = uniform(rng, 1.0, 30.0);

  const geom::BoundaryPoint bp = shape.point_at_fraction(frac);
  const Vec2 p = bp.point + bp.normal * (geom::kPusherRadius + gap);
  const Vec2 dir = rotation(deg2rad(angle)) * bp.normal;

  DatasetRecord& r = out.rec;
  r.object_id = object_id;
  r.pose_before = Pose2();
  r.pose_after = Pose2();
  r.action = {p, dir * std::min(speed * cfg.horizon, cfg.push_length), cfg.horizon};
  r.contact_gt = annotate_contact(object_id, r.pose_before, p);
  r.contact_gt.s = 0.0;
  r.contact_action = r.action;
  r.friction = {cfg.mu, nominal_l(object_id) * cfg.l_scale};
  r.speed = speed;
  r.angle_deg = angle;
  r.contact_frac = frac;
  r.no_contact_push = true;
  out.pusher_path = {p, p + r.action.u};
}

Pose2 sample_scene_transform(const CanonicalRecord& c, double table_half_extent,
                             std::mt19937_64& rng) {
  const double radius = geom::shape_for(c.rec.object_id).bounding_radius();
  const double margin = std::max(0.0, table_half_extent - radius - 10.0);
  const double limit = table_half_extent - geom::kPusherRadius - 5.0;
  Pose2 t;
  for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
    t = Pose2(uniform(rng, -margin, margin), uniform(rng, -margin, margin), uniform(rng, -kPi, kPi));
    const bool visible = std::all_of(c.pusher_path.begin(), c.pusher_path.end(), [&](const Vec2& p) {
      return t.transform_point(p).cwiseAbs().maxCoeff() <= limit;
    });
    if (visible) return t;
  }
  return Pose2(0.0, 0.0, t.theta);
}

}  // namespace

GenConfig::GenConfig() {
  for (int a = -60; a <= 60; a += 10) angles.push_back(a);
}

Camera make_camera(const CameraSpec& spec) {
  if (spec.mode == CameraMode::TopDown) return raster::top_down_camera(spec.image_size, spec.table_half_extent);
  return raster::pinhole_camera(spec.image_size, spec.position, spec.target, spec.table_half_extent);
}

int default_substeps(double horizon, double rate) {
  return std::max(1, static_cast<int>(std::lround(horizon * rate)));
}

double nominal_l(const std::string& object_id) {
  static std::mutex mu;
  static std::map<std::string, double> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(object_id);
  if (it == cache.end()) it = cache.emplace(object_id, geom::uniform_pressure_l(geom::shape_for(object_id))).first;
  return it->second;
}

ContactInfo annotate_contact(const std::string& object_id, const Pose2& pose, const Vec2& pusher) {
  const geom::ClosestPoint cp = geom::closest_boundary_point(geom::shape_for(object_id), pose, pusher);
  ContactInfo info;
  info.c = cp.c;
  info.n = -cp.n;
  info.s = geom::contact_indicator(cp.signed_distance, geom::kPusherRadius, geom::kContactTolerance);
  return info;
}

Trajectory rollout(const SceneState& scene, const PushAction& action, int substeps) {
  if (substeps < 1) fail(ErrorKind::InvalidArgument, "rollout: substeps must be >= 1");
  const geom::ShapeSpec& shape = geom::shape_for(scene.object_id);
  const Vec2 du = action.u / substeps;
  const PushAction step_action{Vec2::Zero(), du, action.horizon / substeps};

  Trajectory traj;
  traj.states.reserve(substeps + 1);
  traj.contact.reserve(substeps);
  traj.states.push_back(scene);
  SceneState s = scene;
  for (int k = 0; k < substeps; ++k) {
    const geom::ClosestPoint cp = geom::closest_boundary_point(shape, s.object_pose, s.pusher_pos);
    const int in_contact =
        geom::contact_indicator(cp.signed_distance, geom::kPusherRadius, geom::kContactTolerance);
    traj.contact.push_back(static_cast<std::uint8_t>(in_contact));
    if (in_contact) {
      const ContactInfo contact{cp.c, -cp.n, 1.0};
      const Twist2 tw = model::predict(contact, s.object_pose.position(), step_action, s.friction).twist;
      s.object_pose = compose_delta(s.object_pose, tw);
    }
    s.pusher_pos += du;

    const geom::ClosestPoint after = geom::closest_boundary_point(shape, s.object_pose, s.pusher_pos);
    const double penetration = geom::kPusherRadius - after.signed_distance;
    if (penetration > 0.0) {
      if (penetration > kMaxPenetration)
        fail(ErrorKind::Geometry, "rollout: penetration beyond 1 mm, substeps too coarse");
      const Vec2 shift = -after.n * penetration;
      s.object_pose = Pose2(s.object_pose.x + shift.x(), s.object_pose.y + shift.y(), s.object_pose.theta);
    }
    traj.states.push_back(s);
  }
  return traj;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::mt19937_64 record_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed ^ stream) + index));
}

DatasetRecord transform_record(const DatasetRecord& r, const Pose2& t) {
  DatasetRecord o = r;
  o.pose_before = compose(t, r.pose_before);
  o.pose_after = compose(t, r.pose_after);
  o.action.p = t.transform_point(r.action.p);
  o.action.u = t.transform_vector(r.action.u);
  o.contact_action.p = t.transform_point(r.contact_action.p);
  o.contact_action.u = t.transform_vector(r.contact_action.u);
  o.contact_gt.c = t.transform_point(r.contact_gt.c);
  o.contact_gt.n = t.transform_vector(r.contact_gt.n);
  o.scene_transform = compose(t, r.scene_transform);
  return o;
}

DatasetRecord inject_noise(const DatasetRecord& record, const NoiseConfig& noise, std::mt19937_64& rng) {
  if (!noise.any()) return record;
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Draw every variate unconditionally so the stream layout does not depend on the record.
  const double z_mag = gauss(rng), z_dir = gauss(rng), flip = unit(rng);
  const double e[6] = {gauss(rng), gauss(rng), gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
  const double z_l = gauss(rng);

  DatasetRecord r = record;
  Twist2 t = record.label();
  const bool moving = record.contact_gt.s > 0.0;
  if (moving) {
    const double m = std::exp(noise.motion_multiplier_sigma * z_mag);
    const Vec2 v = rotation(noise.motion_multiplier_sigma * z_dir) * t.linear() * m;
    t = {v.x(), v.y(), t.omega * m};
    if (flip < noise.bimodal_prob) {
      const double un = record.action.u.norm();
      if (un > 0.0) {
        const Vec2 uh = record.action.u / un;
        const Vec2 mirrored = 2.0 * t.linear().dot(uh) * uh - t.linear();
        t = {mirrored.x(), mirrored.y(), -t.omega};
      }
    }
  }

  const double sp = noise.pose_obs_sigma, sr = deg2rad(noise.pose_obs_sigma);
  r.pose_before = Pose2(record.pose_before.x + sp * e[0], record.pose_before.y + sp * e[1],
                        record.pose_before.theta + sr * e[2]);
  if (moving) {
    t.vx += sp * (e[3] - e[0]);
    t.vy += sp * (e[4] - e[1]);
    t.omega += sr * (e[5] - e[2]);
  }
  r.pose_after = compose_delta(r.pose_before, t);
  r.friction.l = record.friction.l * std::max(0.05, 1.0 + noise.friction_jitter * z_l);
  return r;
}

std::vector<DatasetRecord> generate_dataset(const GenConfig& config) {
  std::vector<std::string> objects = config.objects;
  if (objects.empty())
    for (const auto& [id, _] : geom::catalog()) objects.push_back(id);
  if (objects.empty()) fail(ErrorKind::InvalidArgument, "gen: empty object list");
  for (const auto& id : objects) nominal_l(id);
  if (config.n_records <= 0) fail(ErrorKind::InvalidArgument, "gen: n_records must be positive");
  if (config.angles.empty() || config.push_speeds.empty())
    fail(ErrorKind::InvalidArgument, "gen: angles and push_speeds must be non-empty");
  if (config.augment_transforms_per_push < 1)
    fail(ErrorKind::InvalidArgument, "gen: augment_transforms_per_push must be >= 1");

  const Camera camera = make_camera(config.camera);
  const int per_push = config.augment_transforms_per_push;
  const int n_pushes = (config.n_records + per_push - 1) / per_push;
  std::vector<DatasetRecord> records(config.n_records);

#pragma omp parallel for schedule(dynamic)
  for (int push = 0; push < n_pushes; ++push) {
    std::mt19937_64 rng = record_rng(config.seed, kStreamPush, push);
    const bool no_contact = uniform(rng, 0.0, 1.0) < config.no_contact_frac;
    CanonicalRecord canon;
    bool ok = false;
    for (int attempt = 0; attempt < kMaxResamples && !ok; ++attempt) {
      const std::string& obj = pick(objects, rng);
      if (no_contact) {
        sample_no_contact(obj, config, rng, canon);
        ok = true;
      } else {
        ok = sample_contact_window(obj, config, rng, canon);
      }
    }
    if (!ok) sample_no_contact(pick(objects, rng), config, rng, canon);

    for (int k = 0; k < per_push; ++k) {
      const long id = static_cast<long>(push) * per_push + k;
      if (id >= config.n_records) break;
      const Pose2 t = sample_scene_transform(canon, config.camera.table_half_extent, rng);
      DatasetRecord r = transform_record(canon.rec, t);
      r.id = config.id_offset + static_cast<std::uint64_t>(id);
      r.push_id = config.id_offset + static_cast<std::uint64_t>(push);
      SceneState scene{r.object_id, r.pose_before, r.action.p, r.friction};
      r.depth = raster::render_depth(scene, camera, config.camera.image_size, config.camera.image_size);
      if (config.noise.any()) {
        std::mt19937_64 noise_rng = record_rng(config.seed, kStreamNoise, r.id);
        r = inject_noise(r, config.noise, noise_rng);
      }
      records[id] = std::move(r);
    }
  }
  return records;
}

}  // namespace pushnet::sim
