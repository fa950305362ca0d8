#include "pushnet/core/error.hpp"
#include "pushnet/geom/shapes.hpp"
#include "pushnet/sim/dataset_io.hpp"
#include "pushnet/sim/simulator.hpp"

#include "util.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace pushnet;
using namespace pushnet::sim;

namespace {

SceneState touching_rect1(double gap = 0.0) {
  SceneState s;
  s.object_id = "rect1";
  s.pusher_pos = Vec2(-45.0 - geom::kPusherRadius - gap, 0.0);
  s.friction = {0.25, nominal_l("rect1")};
  return s;
}

double pose_distance(const Pose2& a, const Pose2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool same_record(const DatasetRecord& a, const DatasetRecord& b) {
  return record_to_json(a) == record_to_json(b) && a.depth.data == b.depth.data;
}

}  // namespace

TEST_CASE("rollout: a pusher that misses leaves the object in place") {
  SceneState s = touching_rect1(20.0);
  const PushAction away{s.pusher_pos, Vec2(0, -50), 0.5};
  const auto traj = rollout(s, away, 125);
  REQUIRE(traj.states.size() == 126);
  const Pose2& end = traj.states.back().object_pose;
  CHECK(end.x == 0.0);
  CHECK(end.y == 0.0);
  CHECK(end.theta == 0.0);
  for (auto c : traj.contact) CHECK(c == 0);
}

TEST_CASE("rollout: central sticking push translates without rotation") {
  SceneState s = touching_rect1();
  const PushAction push{s.pusher_pos, Vec2(50, 0), 0.5};
  const auto traj = rollout(s, push, 125);
  const Pose2& end = traj.states.back().object_pose;
  CHECK(end.x == doctest::Approx(50.0).epsilon(1e-9));
  CHECK(std::abs(end.y) < 1e-9);
  CHECK(std::abs(end.theta) < 1e-6);
}

TEST_CASE("rollout: halving the substep barely moves the result") {
  for (double offset : {-30.0, -10.0, 15.0, 35.0}) {
    SceneState s = touching_rect1();
    s.pusher_pos.y() = offset;
    const PushAction push{s.pusher_pos, Vec2(50, 8), 0.5};
    const Pose2 coarse = rollout(s, push, 125).states.back().object_pose;
    const Pose2 fine = rollout(s, push, 250).states.back().object_pose;
    INFO("offset " << offset);
    CHECK(pose_distance(coarse, fine) < 0.1);
    CHECK(std::abs(coarse.theta - fine.theta) < 2e-3);
  }
}

TEST_CASE("rollout: the object rests whenever there is no contact") {
  SceneState s = touching_rect1(6.0);
  s.pusher_pos.y() = 30.0;
  const PushAction push{s.pusher_pos, Vec2(60, -10), 0.5};
  const auto traj = rollout(s, push, 125);
  int touching = 0;
  for (size_t k = 0; k < traj.contact.size(); ++k) {
    touching += traj.contact[k];
    if (traj.contact[k]) continue;
    const Pose2& a = traj.states[k].object_pose;
    const Pose2& b = traj.states[k + 1].object_pose;
    CHECK(a.x == b.x);
    CHECK(a.y == b.y);
    CHECK(a.theta == b.theta);
  }
  CHECK(touching > 0);
  CHECK(traj.contact.front() == 0);
}

TEST_CASE("rollout errors") {
  SceneState s = touching_rect1();
  s.pusher_pos = Vec2(-30, 0);  // deep inside
  CHECK_THROWS_AS(rollout(s, {s.pusher_pos, Vec2(10, 0), 0.5}, 10), Error);
  CHECK_THROWS_AS(rollout(touching_rect1(), {Vec2::Zero(), Vec2(10, 0), 0.5}, 0), Error);
}

TEST_CASE("annotate_contact normals point into the object") {
  const auto c = annotate_contact("rect1", Pose2(), Vec2(-45.0 - geom::kPusherRadius, 0.0));
  CHECK(c.s == 1.0);
  CHECK((c.n - Vec2(1, 0)).norm() < 1e-12);
  CHECK((c.c - Vec2(-45, 0)).norm() < 1e-12);
  CHECK(annotate_contact("rect1", Pose2(), Vec2(-70, 0)).s == 0.0);
}

TEST_CASE("generate_dataset is deterministic and thread-count independent") {
  const GenConfig g = testutil::small_gen(60);
  const auto a = generate_dataset(g);
  const auto b = generate_dataset(g);
  REQUIRE(a.size() == 60);
  for (size_t i = 0; i < a.size(); ++i) CHECK(same_record(a[i], b[i]));

  GenConfig other = g;
  other.seed = g.seed + 1;
  CHECK(record_to_json(generate_dataset(other)[0]) != record_to_json(a[0]));
}

TEST_CASE("generate_dataset labels and annotations") {
  GenConfig g = testutil::small_gen(400, 5);
  const auto recs = generate_dataset(g);
  for (const auto& r : recs) {
    CHECK(r.action.horizon == g.horizon);
    CHECK(r.depth.width == 16);
    if (r.contact_gt.s == 0.0) {
      CHECK(r.no_contact_push);
      CHECK(r.pose_after.x == r.pose_before.x);
      CHECK(r.pose_after.y == r.pose_before.y);
      CHECK(r.pose_after.theta == r.pose_before.theta);
    } else {
      CHECK(r.contact_gt.n.norm() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(std::find(g.angles.begin(), g.angles.end(), r.angle_deg) != g.angles.end());
    }
    CHECK(r.speed == 20.0);
    CHECK(r.action.u.norm() <= g.push_length + 1e-9);
  }
}

TEST_CASE("generate_dataset honours restricted angles and fractions") {
  GenConfig g = testutil::small_gen(120, 6);
  g.angles = {-20, 0, 20};
  g.contact_fracs = {0.1, 0.35};
  for (const auto& r : generate_dataset(g)) {
    CHECK((r.angle_deg == -20 || r.angle_deg == 0 || r.angle_deg == 20));
    CHECK((r.contact_frac == 0.1 || r.contact_frac == 0.35));
  }
}

TEST_CASE("no-contact fraction over 10k pushes") {
  GenConfig g = testutil::small_gen(10000, 17, 8);
  g.augment_transforms_per_push = 1;
  const double frac = no_contact_fraction(generate_dataset(g));
  CHECK(std::abs(frac - 1.0 / 3.0) <= 0.02);
}

TEST_CASE("generate_dataset validates its config") {
  GenConfig g = testutil::small_gen(10);
  g.objects = {"no-such-object"};
  CHECK_THROWS(generate_dataset(g));
  g = testutil::small_gen(0);
  CHECK_THROWS_AS(generate_dataset(g), Error);
  g = testutil::small_gen(10);
  g.push_speeds.clear();
  CHECK_THROWS_AS(generate_dataset(g), Error);
}

TEST_CASE("id offsets keep generated sets disjoint") {
  GenConfig a = testutil::small_gen(50);
  GenConfig b = a;
  b.seed = 99;
  b.id_offset = 1000000000;
  std::set<std::uint64_t> ids;
  for (const auto& r : generate_dataset(a)) ids.insert(r.id);
  for (const auto& r : generate_dataset(b)) CHECK(ids.count(r.id) == 0);
}

TEST_CASE("augmented records replay under the transformed scene") {
  const auto recs = generate_dataset(testutil::small_gen(80, 8));
  int replayed = 0;
  for (const auto& r : recs) {
    if (r.contact_gt.s == 0.0) continue;
    const SceneState scene{r.object_id, r.pose_before, r.action.p, r.friction};
    const Pose2 end = rollout(scene, r.action, 125).states.back().object_pose;
    INFO("record " << r.id);
    CHECK(pose_distance(end, r.pose_after) < 0.1);
    ++replayed;

    // an extra transform moves the outcome with it
    const Pose2 t(12.0, -7.0, 0.9);
    const DatasetRecord m = transform_record(r, t);
    const SceneState ms{m.object_id, m.pose_before, m.action.p, m.friction};
    const Pose2 mend = rollout(ms, m.action, 125).states.back().object_pose;
    CHECK(pose_distance(mend, compose(t, end)) < 1e-6);
  }
  CHECK(replayed > 20);
}

TEST_CASE("inject_noise") {
  const auto recs = generate_dataset(testutil::small_gen(40, 9));
  std::mt19937_64 rng(1);
  for (const auto& r : recs) CHECK(same_record(inject_noise(r, NoiseConfig{}, rng), r));

  const DatasetRecord* moving = nullptr;
  for (const auto& r : recs)
    if (r.contact_gt.s > 0 && r.label().linear().norm() > 5.0 && std::abs(r.label().omega) > 1e-3) {
      moving = &r;
      break;
    }
  REQUIRE(moving != nullptr);
  const double base = moving->label().linear().norm();

  SUBCASE("lognormal magnitude moment") {
    NoiseConfig n;
    n.motion_multiplier_sigma = 0.1;
    double sum = 0;
    const int N = 10000;
    for (int i = 0; i < N; ++i) {
      std::mt19937_64 r = record_rng(5, 7, i);
      sum += inject_noise(*moving, n, r).label().linear().norm();
    }
    const double want = base * std::exp(0.5 * 0.1 * 0.1);
    CHECK(std::abs(sum / N - want) <= 0.01 * want);
  }

  SUBCASE("bimodal flips the rotation sign about half the time") {
    NoiseConfig n;
    n.bimodal_prob = 0.5;
    int positive = 0;
    const int N = 4000;
    for (int i = 0; i < N; ++i) {
      std::mt19937_64 r = record_rng(6, 7, i);
      const double w = inject_noise(*moving, n, r).label().omega;
      CHECK(std::abs(std::abs(w) - std::abs(moving->label().omega)) < 1e-12);
      positive += w > 0;
    }
    CHECK(std::abs(positive / double(N) - 0.5) < 0.04);
  }

  SUBCASE("observation noise leaves still records still") {
    NoiseConfig n;
    n.pose_obs_sigma = 1.0;
    for (const auto& r : recs) {
      if (r.contact_gt.s != 0.0) continue;
      std::mt19937_64 rr(3);
      const auto noisy = inject_noise(r, n, rr);
      CHECK(noisy.label().linear().norm() == 0.0);
      CHECK(noisy.label().omega == 0.0);
    }
  }
}

TEST_CASE("dataset files round trip") {
  testutil::TempDir dir("ds");
  const GenConfig g = testutil::small_gen(30);
  auto recs = generate_dataset(g);
  const Camera cam = make_camera(g.camera);
  const Dataset ds = make_dataset(recs, cam, nlohmann::json{{"note", "test"}});
  save_dataset(ds, dir.str("train"));
  const Dataset back = load_dataset(dir.str("train"));
  REQUIRE(back.records.size() == recs.size());
  for (size_t i = 0; i < recs.size(); ++i) CHECK(same_record(back.records[i], recs[i]));
  CHECK(back.width == 16);

  save_dataset(back, dir.str("again"));
  CHECK(testutil::read_file(dir.str("train.jsonl")) == testutil::read_file(dir.str("again.jsonl")));
  CHECK(testutil::read_file(dir.str("train.imgs")) == testutil::read_file(dir.str("again.imgs")));
  CHECK_THROWS_AS(load_dataset(dir.str("missing")), Error);
}
