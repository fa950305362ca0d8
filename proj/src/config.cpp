#include "pushnet/config/config.hpp"

#include "pushnet/sim/dataset_io.hpp"

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace pushnet::config {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::Config, what); }

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open config " + path);
  try {
    return json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    config_error(path + ": " + e.what());
  }
}

json load_with_chain(const std::string& path, std::set<std::string>& visiting) {
  const std::string key = std::filesystem::weakly_canonical(path).string();
  if (!visiting.insert(key).second) config_error("config extends cycle through " + path);
  json self = parse_file(path);
  if (!self.is_object()) config_error(path + ": top level must be an object");
  json out = json::object();
  if (self.contains("extends")) {
    std::vector<std::string> bases;
    if (self["extends"].is_string()) bases.push_back(self["extends"].get<std::string>());
    else if (self["extends"].is_array()) bases = self["extends"].get<std::vector<std::string>>();
    else config_error(path + ": extends must be a path or a list of paths");
    const auto dir = std::filesystem::path(path).parent_path();
    for (const auto& b : bases) merge_into(out, load_with_chain((dir / b).string(), visiting));
    self.erase("extends");
  }
  merge_into(out, self);
  visiting.erase(key);
  return out;
}

// Sections are looked up in the user tree first, then in the defaults.
json resolve_section(const json& root, const json& defaults, const std::string& name,
                     std::set<std::string>& visiting) {
  if (!root.contains(name)) return defaults.at(name);
  const json& sec = root.at(name);
  if (!sec.is_object() || !sec.contains("inherits")) return sec;
  if (!sec["inherits"].is_string()) config_error(name + ".inherits must be a section name");
  const std::string parent = sec["inherits"].get<std::string>();
  if (!root.contains(parent) && !defaults.contains(parent))
    config_error(name + " inherits unknown section " + parent);
  if (!visiting.insert(name).second) config_error("section inheritance cycle through " + name);
  json out = resolve_section(root, defaults, parent, visiting);
  json own = sec;
  own.erase("inherits");
  merge_into(out, own);
  visiting.erase(name);
  return out;
}

// Every key of a known section must exist in the defaults (catches typos).
void check_keys(const json& value, const json& defaults, const std::string& path) {
  if (!value.is_object() || !defaults.is_object()) return;
  for (auto it = value.begin(); it != value.end(); ++it) {
    if (!defaults.contains(it.key())) config_error("unknown config key " + path + it.key());
    const json& d = defaults.at(it.key());
    const std::string child = path + it.key();
    // Named test sets are user-defined keys.
    if (child == "experiment.heldout_objects.test_sets") continue;
    if (d.is_object() && !d.empty()) check_keys(it.value(), d, child + ".");
  }
}

template <typename T>
T get(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    config_error(fmt::format("config key '{}': {}", key, e.what()));
  }
}

}  // namespace

json default_config() {
  const sim::GenConfig g;
  const predictors::ArchConfig a;
  const predictors::TrainConfig t;
  json cfg = {
      {"seed", 1},
      {"generation", gen_config_to_json(g)},
      {"model", predictors::arch_to_json(a)},
      {"training", predictors::train_config_to_json(t)},
      {"experiment",
       {{"train_records", 20000},
        {"test_records", 4000},
        {"train_speed", 20.0},
        {"variants", {"zero", "physics", "neural", "simple", "hybrid", "error", "neural-dyn"}},
        {"test_seed_offset", 1000003},
        {"data_efficiency", {{"sizes", {2500, 5000, 10000, 20000}}, {"seeds", 3}, {"variants", nullptr}}},
        {"velocity",
         {{"speeds", {10, 20, 50, 75, 100, 150}},
          {"variants",
           {"zero", "physics", "neural", "simple", "hybrid", "error", "error-grad", "error-norm", "neural-dyn"}}}},
        {"heldout_pushes",
         {{"angles", {-20, 0, 20}},
          {"contact_fracs", {0.1, 0.35, 0.6, 0.85}},
          {"train_fracs", 20},
          {"train_records", nullptr},
          {"variants", {"zero", "physics", "neural", "simple", "hybrid", "error", "neural-dyn"}}}},
        {"heldout_objects",
         {{"train_sets", {{"butter"}, {"butter", "hex"}, {"butter", "hex", "rect1"}}},
          {"test_sets", {{"ellipses", {"ellip1", "ellip2", "ellip3"}}, {"triangles", {"tri1", "tri2", "tri3"}}}},
          {"train_records", nullptr},
          {"variants", {"zero", "physics", "neural", "hybrid", "error"}}}},
        {"wrong_friction",
         {{"factors", {1.0, 1.5, 3.0}}, {"variants", {"hybrid", "error"}}, {"train_records", nullptr}}},
        {"viewpoint",
         {{"variants", {"hybrid"}},
          {"loss", "viewpoint"},
          {"position", {0.0, -250.0, 400.0}},
          {"train_records", nullptr}}},
        {"repeated_push",
         {{"n", 200},
          {"object", "rect1"},
          {"angle", 20.0},
          {"contact_frac", 0.3},
          {"contact_bound_mm", 10.0},
          {"variants", {"physics", "neural", "hybrid", "error"}}}}}},
  };
  // The generation seed follows the top-level seed unless set explicitly.
  cfg["generation"]["seed"] = nullptr;
  return cfg;
}

void merge_into(json& base, const json& overlay) {
  if (!base.is_object() || !overlay.is_object()) {
    base = overlay;
    return;
  }
  for (auto it = overlay.begin(); it != overlay.end(); ++it) {
    if (base.contains(it.key()) && base[it.key()].is_object() && it.value().is_object())
      merge_into(base[it.key()], it.value());
    else
      base[it.key()] = it.value();
  }
}

void apply_set(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) config_error("--set expects key.path=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &cfg;
  size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) config_error("--set: empty key segment in '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

json load_file(const std::string& path) {
  std::set<std::string> visiting;
  return load_with_chain(path, visiting);
}

json resolve_tree(const json& user, const std::vector<std::string>& sets) {
  const json defaults = default_config();
  json merged = defaults;
  // Resolve section inheritance on the user tree first, so "inherits" sees
  // the user's own sections.
  json resolved_user = user.is_null() ? json::object() : user;
  for (auto it = resolved_user.begin(); it != resolved_user.end(); ++it) {
    std::set<std::string> visiting;
    if (it.value().is_object()) it.value() = resolve_section(resolved_user, defaults, it.key(), visiting);
  }
  // Sections that exist only to be inherited from are dropped.
  for (auto it = user.begin(); user.is_object() && it != user.end(); ++it) {
    if (!it.value().is_object() || !it.value().contains("inherits") || !it.value()["inherits"].is_string()) continue;
    const std::string parent = it.value()["inherits"].get<std::string>();
    if (!defaults.contains(parent)) resolved_user.erase(parent);
  }
  merge_into(merged, resolved_user);
  for (const auto& s : sets) apply_set(merged, s);
  check_keys(merged, defaults, "");
  if (merged["generation"]["seed"].is_null()) merged["generation"]["seed"] = merged["seed"];
  // Validate by converting every typed section once.
  (void)gen_config(merged);
  (void)arch_config(merged);
  (void)train_config(merged);
  return merged;
}

json resolve(const std::string& path, const std::vector<std::string>& sets) {
  return resolve_tree(path.empty() ? json::object() : load_file(path), sets);
}

std::string hash(const json& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string output_root() {
  const char* env = std::getenv("PUSHNET_OUT");
  return env && *env ? env : "runs";
}

json noise_to_json(const sim::NoiseConfig& n) {
  return {{"pose_obs_sigma", n.pose_obs_sigma},
          {"friction_jitter", n.friction_jitter},
          {"motion_multiplier_sigma", n.motion_multiplier_sigma},
          {"bimodal_prob", n.bimodal_prob}};
}

sim::NoiseConfig noise_config(const json& s) {
  sim::NoiseConfig n;
  n.pose_obs_sigma = s.value("pose_obs_sigma", n.pose_obs_sigma);
  n.friction_jitter = s.value("friction_jitter", n.friction_jitter);
  n.motion_multiplier_sigma = s.value("motion_multiplier_sigma", n.motion_multiplier_sigma);
  n.bimodal_prob = s.value("bimodal_prob", n.bimodal_prob);
  if (n.pose_obs_sigma < 0 || n.friction_jitter < 0 || n.motion_multiplier_sigma < 0 || n.bimodal_prob < 0 ||
      n.bimodal_prob > 1)
    config_error("noise parameters must be >= 0 (bimodal_prob <= 1)");
  return n;
}

json gen_config_to_json(const sim::GenConfig& g) {
  json cam = {{"mode", g.camera.mode == CameraMode::TopDown ? "topdown" : "pinhole"},
              {"image_size", g.camera.image_size},
              {"table_half_extent", g.camera.table_half_extent},
              {"position", {g.camera.position.x(), g.camera.position.y(), g.camera.position.z()}},
              {"target", {g.camera.target.x(), g.camera.target.y(), g.camera.target.z()}}};
  return {{"objects", g.objects},
          {"push_speeds", g.push_speeds},
          {"push_length", g.push_length},
          {"horizon", g.horizon},
          {"rate", g.rate},
          {"angles", g.angles},
          {"contact_fracs", g.contact_fracs},
          {"n_records", g.n_records},
          {"no_contact_frac", g.no_contact_frac},
          {"augment_transforms_per_push", g.augment_transforms_per_push},
          {"approach_gap_max", g.approach_gap_max},
          {"mu", g.mu},
          {"l_scale", g.l_scale},
          {"noise", noise_to_json(g.noise)},
          {"camera", cam},
          {"seed", g.seed},
          {"id_offset", g.id_offset}};
}

sim::GenConfig gen_config(const json& cfg) {
  const json& s = cfg.at("generation");
  sim::GenConfig g;
  g.objects = get<std::vector<std::string>>(s, "objects");
  g.push_speeds = get<std::vector<double>>(s, "push_speeds");
  g.push_length = get<double>(s, "push_length");
  g.horizon = get<double>(s, "horizon");
  g.rate = get<double>(s, "rate");
  g.angles = get<std::vector<double>>(s, "angles");
  g.contact_fracs = get<std::vector<double>>(s, "contact_fracs");
  g.n_records = get<int>(s, "n_records");
  g.no_contact_frac = get<double>(s, "no_contact_frac");
  g.augment_transforms_per_push = get<int>(s, "augment_transforms_per_push");
  g.approach_gap_max = get<double>(s, "approach_gap_max");
  g.mu = get<double>(s, "mu");
  g.l_scale = get<double>(s, "l_scale");
  g.noise = noise_config(s.at("noise"));
  g.seed = s.contains("seed") && !s["seed"].is_null() ? get<std::uint64_t>(s, "seed") : get<std::uint64_t>(cfg, "seed");
  g.id_offset = get<std::uint64_t>(s, "id_offset");
  const json& c = s.at("camera");
  const std::string mode = get<std::string>(c, "mode");
  if (mode == "topdown") g.camera.mode = CameraMode::TopDown;
  else if (mode == "pinhole") g.camera.mode = CameraMode::Pinhole;
  else config_error("generation.camera.mode must be topdown or pinhole");
  g.camera.image_size = get<int>(c, "image_size");
  g.camera.table_half_extent = get<double>(c, "table_half_extent");
  const auto pos = get<std::vector<double>>(c, "position");
  const auto tgt = get<std::vector<double>>(c, "target");
  if (pos.size() != 3 || tgt.size() != 3) config_error("camera position/target need 3 entries");
  g.camera.position = Vec3(pos[0], pos[1], pos[2]);
  g.camera.target = Vec3(tgt[0], tgt[1], tgt[2]);

  if (g.push_speeds.empty()) config_error("generation.push_speeds must not be empty");
  for (double v : g.push_speeds)
    if (!(v > 0)) config_error("generation.push_speeds must be > 0");
  if (!(g.push_length > 0) || !(g.horizon > 0) || !(g.rate > 0)) config_error("push_length, horizon, rate must be > 0");
  if (g.angles.empty()) config_error("generation.angles must not be empty");
  if (g.n_records < 0) config_error("generation.n_records must be >= 0");
  if (g.no_contact_frac < 0 || g.no_contact_frac > 1) config_error("generation.no_contact_frac must be in [0, 1]");
  if (g.augment_transforms_per_push < 1) config_error("generation.augment_transforms_per_push must be >= 1");
  if (g.mu < 0 || !(g.l_scale > 0)) config_error("generation.mu >= 0 and l_scale > 0 required");
  if (g.camera.image_size < 8) config_error("generation.camera.image_size must be >= 8");
  return g;
}

predictors::ArchConfig arch_config(const json& cfg) {
  try {
    return predictors::arch_from_json(cfg.at("model"));
  } catch (const Error& e) {
    config_error(e.what());
  }
}

predictors::TrainConfig train_config(const json& cfg) {
  try {
    return predictors::train_config_from_json(cfg.at("training"));
  } catch (const json::exception& e) {
    config_error(std::string("training: ") + e.what());
  }
}

}  // namespace pushnet::config
