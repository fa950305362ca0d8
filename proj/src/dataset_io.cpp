#include "pushnet/sim/dataset_io.hpp"

#include "pushnet/core/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace pushnet::sim {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "blob format assumes a little-endian host");

json vec2(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec2 vec2(const json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }
json pose(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }
Pose2 pose(const json& j) { return Pose2(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }
json action(const PushAction& a) { return {{"p", vec2(a.p)}, {"u", vec2(a.u)}, {"horizon", a.horizon}}; }
PushAction action(const json& j) {
  return {vec2(j.at("p")), vec2(j.at("u")), j.at("horizon").get<double>()};
}

}  // namespace

json record_to_json(const DatasetRecord& r) {
  return {
      {"id", r.id},
      {"push_id", r.push_id},
      {"object", r.object_id},
      {"action", action(r.action)},
      {"contact_action", action(r.contact_action)},
      {"pose_before", pose(r.pose_before)},
      {"pose_after", pose(r.pose_after)},
      {"contact", {{"c", vec2(r.contact_gt.c)}, {"n", vec2(r.contact_gt.n)}, {"s", r.contact_gt.s}}},
      {"friction", {{"mu", r.friction.mu}, {"l", r.friction.l}}},
      {"scene_transform", pose(r.scene_transform)},
      {"speed", r.speed},
      {"angle_deg", r.angle_deg},
      {"contact_frac", r.contact_frac},
      {"no_contact_push", r.no_contact_push},
  };
}

DatasetRecord record_from_json(const json& j) {
  try {
    DatasetRecord r;
    r.id = j.at("id").get<std::uint64_t>();
    r.push_id = j.at("push_id").get<std::uint64_t>();
    r.object_id = j.at("object").get<std::string>();
    r.action = action(j.at("action"));
    r.contact_action = action(j.at("contact_action"));
    r.pose_before = pose(j.at("pose_before"));
    r.pose_after = pose(j.at("pose_after"));
    const json& c = j.at("contact");
    r.contact_gt = {vec2(c.at("c")), vec2(c.at("n")), c.at("s").get<double>()};
    r.friction = {j.at("friction").at("mu").get<double>(), j.at("friction").at("l").get<double>()};
    r.scene_transform = pose(j.at("scene_transform"));
    r.speed = j.at("speed").get<double>();
    r.angle_deg = j.at("angle_deg").get<double>();
    r.contact_frac = j.at("contact_frac").get<double>();
    r.no_contact_push = j.at("no_contact_push").get<bool>();
    return r;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("dataset record: ") + e.what());
  }
}

json camera_to_json(const Camera& c) {
  json R = json::array();
  for (int i = 0; i < 3; ++i) R.push_back({c.extrinsic.R(i, 0), c.extrinsic.R(i, 1), c.extrinsic.R(i, 2)});
  return {{"mode", c.mode == CameraMode::Pinhole ? "pinhole" : "top-down"},
          {"focal", c.focal},
          {"center", vec2(c.center)},
          {"R", R},
          {"t", {c.extrinsic.t.x(), c.extrinsic.t.y(), c.extrinsic.t.z()}}};
}

Camera camera_from_json(const json& j) {
  try {
    Camera c;
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "pinhole") c.mode = CameraMode::Pinhole;
    else if (mode == "top-down") c.mode = CameraMode::TopDown;
    else fail(ErrorKind::Format, "camera: unknown mode " + mode);
    c.focal = j.at("focal").get<double>();
    c.center = vec2(j.at("center"));
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) c.extrinsic.R(i, k) = j.at("R").at(i).at(k).get<double>();
    for (int i = 0; i < 3; ++i) c.extrinsic.t(i) = j.at("t").at(i).get<double>();
    return c;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("camera: ") + e.what());
  }
}

double no_contact_fraction(const std::vector<DatasetRecord>& records) {
  if (records.empty()) return 0.0;
  size_t n = 0;
  for (const auto& r : records) n += r.contact_gt.s == 0.0;
  return static_cast<double>(n) / records.size();
}

Dataset make_dataset(std::vector<DatasetRecord> records, const Camera& camera, const json& gen_config) {
  Dataset ds;
  ds.camera = camera;
  if (!records.empty()) {
    ds.width = records.front().depth.width;
    ds.height = records.front().depth.height;
  }
  std::map<std::string, int> per_object;
  size_t no_contact = 0;
  for (const auto& r : records) {
    per_object[r.object_id]++;
    no_contact += r.contact_gt.s == 0.0;
  }
  ds.manifest = {{"format_version", 1},
                 {"n_records", records.size()},
                 {"n_contact", records.size() - no_contact},
                 {"n_no_contact", no_contact},
                 {"per_object", per_object},
                 {"width", ds.width},
                 {"height", ds.height},
                 {"camera", camera_to_json(camera)},
                 {"config", gen_config}};
  ds.records = std::move(records);
  return ds;
}

void save_dataset(const Dataset& ds, const std::string& prefix) {
  std::ofstream meta(prefix + ".jsonl", std::ios::binary);
  std::ofstream imgs(prefix + ".imgs", std::ios::binary);
  std::ofstream manifest(prefix + ".manifest.json", std::ios::binary);
  if (!meta || !imgs || !manifest) fail(ErrorKind::Io, "cannot write dataset " + prefix);
  std::uint64_t offset = 0;
  for (const auto& r : ds.records) {
    json j = record_to_json(r);
    const std::uint64_t bytes = r.depth.data.size() * sizeof(float);
    j["img"] = {{"offset", offset}, {"bytes", bytes}, {"width", r.depth.width}, {"height", r.depth.height}};
    meta << j.dump() << '\n';
    imgs.write(reinterpret_cast<const char*>(r.depth.data.data()), static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  manifest << ds.manifest.dump(2) << '\n';
  if (!meta || !imgs || !manifest) fail(ErrorKind::Io, "write failed for dataset " + prefix);
}

Dataset load_dataset(const std::string& prefix) {
  std::ifstream manifest(prefix + ".manifest.json");
  std::ifstream meta(prefix + ".jsonl");
  std::ifstream imgs(prefix + ".imgs", std::ios::binary);
  if (!manifest || !meta || !imgs) fail(ErrorKind::Io, "cannot open dataset " + prefix);
  Dataset ds;
  try {
    manifest >> ds.manifest;
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, std::string("manifest: ") + e.what());
  }
  ds.camera = camera_from_json(ds.manifest.at("camera"));
  ds.width = ds.manifest.at("width").get<int>();
  ds.height = ds.manifest.at("height").get<int>();

  std::string line;
  while (std::getline(meta, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::Format, std::string("dataset line: ") + e.what());
    }
    DatasetRecord r = record_from_json(j);
    const json& img = j.at("img");
    r.depth.width = img.at("width").get<int>();
    r.depth.height = img.at("height").get<int>();
    r.depth.camera = ds.camera;
    const auto bytes = img.at("bytes").get<std::uint64_t>();
    if (bytes != static_cast<std::uint64_t>(r.depth.width) * r.depth.height * sizeof(float))
      fail(ErrorKind::Format, "dataset: image size mismatch");
    r.depth.data.resize(bytes / sizeof(float));
    imgs.seekg(static_cast<std::streamoff>(img.at("offset").get<std::uint64_t>()));
    imgs.read(reinterpret_cast<char*>(r.depth.data.data()), static_cast<std::streamsize>(bytes));
    if (!imgs) fail(ErrorKind::Format, "dataset: truncated image blob");
    ds.records.push_back(std::move(r));
  }
  if (ds.records.size() != ds.manifest.at("n_records").get<size_t>())
    fail(ErrorKind::Format, "dataset: record count does not match manifest");
  return ds;
}

}  // namespace pushnet::sim
