#include "pushnet/config/config.hpp"

#include "util.hpp"

#include <doctest.h>

#include <fstream>

using namespace pushnet;
using nlohmann::json;

namespace {

void write(const std::string& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2);
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("defaults resolve and the generation seed follows the top-level seed") {
  const json cfg = config::resolve("", {});
  CHECK(cfg["generation"]["seed"] == cfg["seed"]);
  const json cfg2 = config::resolve("", {"seed=42"});
  CHECK(cfg2["generation"]["seed"] == 42);
  const json cfg3 = config::resolve("", {"seed=42", "generation.seed=5"});
  CHECK(cfg3["generation"]["seed"] == 5);
}

TEST_CASE("set parses JSON values and falls back to strings") {
  json cfg = json::object();
  config::apply_set(cfg, "a.b=3");
  config::apply_set(cfg, "a.c=[1,2]");
  config::apply_set(cfg, "a.d=hello");
  config::apply_set(cfg, "a.e=true");
  CHECK(cfg["a"]["b"] == 3);
  CHECK(cfg["a"]["c"] == json::array({1, 2}));
  CHECK(cfg["a"]["d"] == "hello");
  CHECK(cfg["a"]["e"] == true);
  CHECK(kind_of([&] { config::apply_set(cfg, "novalue"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { config::apply_set(cfg, "=3"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { config::apply_set(cfg, "a..b=3"); }) == ErrorKind::Config);
}

TEST_CASE("unknown keys and bad values are config errors") {
  CHECK(kind_of([] { config::resolve("", {"training.stpes=3"}); }) == ErrorKind::Config);
  CHECK(kind_of([] { config::resolve("", {"bogus=1"}); }) == ErrorKind::Config);
  CHECK(kind_of([] { config::resolve("", {"training.steps=\"many\""}); }) == ErrorKind::Config);
  // Custom test sets are free-form.
  CHECK_NOTHROW(config::resolve("", {"experiment.heldout_objects.test_sets.discs=[\"ellip1\"]"}));
}

TEST_CASE("extends chains merge in order with paths relative to the file") {
  testutil::TempDir dir("cfg");
  std::filesystem::create_directories(dir.path() / "base");
  write(dir.str("base/a.json"), {{"training", {{"steps", 11}, {"batch", 4}}}});
  write(dir.str("base/b.json"), {{"extends", "a.json"}, {"training", {{"batch", 6}}}});
  write(dir.str("c.json"), {{"extends", json::array({"base/b.json"})}, {"training", {{"lr", 0.5}}}});
  const json cfg = config::resolve(dir.str("c.json"), {"training.seed=9"});
  CHECK(cfg["training"]["steps"] == 11);
  CHECK(cfg["training"]["batch"] == 6);
  CHECK(cfg["training"]["lr"] == 0.5);
  CHECK(cfg["training"]["seed"] == 9);
  CHECK_FALSE(cfg.contains("extends"));
}

TEST_CASE("extends errors") {
  testutil::TempDir dir("cfg");
  write(dir.str("x.json"), {{"extends", "y.json"}});
  write(dir.str("y.json"), {{"extends", "x.json"}});
  CHECK(kind_of([&] { config::load_file(dir.str("x.json")); }) == ErrorKind::Config);
  write(dir.str("m.json"), {{"extends", "missing.json"}});
  CHECK(kind_of([&] { config::load_file(dir.str("m.json")); }) == ErrorKind::Io);
  {
    std::ofstream(dir.str("bad.json")) << "{ not json";
  }
  CHECK(kind_of([&] { config::load_file(dir.str("bad.json")); }) == ErrorKind::Config);
  write(dir.str("num.json"), {{"extends", 3}});
  CHECK(kind_of([&] { config::load_file(dir.str("num.json")); }) == ErrorKind::Config);
}

TEST_CASE("sections inherit from other sections") {
  const json user = {{"fast", {{"steps", 7}, {"batch", 5}}}, {"training", {{"inherits", "fast"}, {"batch", 3}}}};
  const json cfg = config::resolve_tree(user, {});
  CHECK(cfg["training"]["steps"] == 7);
  CHECK(cfg["training"]["batch"] == 3);
  CHECK_FALSE(cfg.contains("fast"));
  CHECK_FALSE(cfg["training"].contains("inherits"));

  CHECK(kind_of([] { config::resolve_tree({{"training", {{"inherits", "nowhere"}}}}, {}); }) == ErrorKind::Config);
  CHECK(kind_of([] {
          config::resolve_tree({{"p", {{"inherits", "q"}}}, {"q", {{"inherits", "p"}}}, {"training", {{"inherits", "p"}}}},
                               {});
        }) == ErrorKind::Config);
}

TEST_CASE("hash is stable, key-order independent and sensitive to values") {
  const json a = config::resolve("", {});
  const json b = config::resolve("", {});
  CHECK(config::hash(a) == config::hash(b));
  CHECK(config::hash(a).size() == 16);
  CHECK(config::hash(a) != config::hash(config::resolve("", {"training.steps=19999"})));
  // FNV-1a 64 of "{}".
  CHECK(config::hash(json::object()) == "08f44b07b5901a25");
  const json x = json::parse(R"({"b":1,"a":2})"), y = json::parse(R"({"a":2,"b":1})");
  CHECK(config::hash(x) == config::hash(y));
}

TEST_CASE("typed sections round trip") {
  const json cfg = config::resolve("", {"generation.camera.mode=\"pinhole\"", "generation.n_records=17"});
  const sim::GenConfig g = config::gen_config(cfg);
  CHECK(g.camera.mode == CameraMode::Pinhole);
  CHECK(g.n_records == 17);
  json again = cfg;
  again["generation"] = config::gen_config_to_json(g);
  CHECK(config::gen_config(again).n_records == 17);
  CHECK(kind_of([] { config::resolve("", {"generation.noise.bimodal_prob=2"}); }) == ErrorKind::Config);
}
