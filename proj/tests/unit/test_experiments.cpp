#include "pushnet/experiments/harness.hpp"

#include "util.hpp"

#include <doctest.h>

#include <set>

using namespace pushnet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

experiments::Context context(const json& cfg, const std::string& dir) {
  experiments::Context ctx;
  ctx.config = cfg;
  ctx.run_dir = dir;
  return ctx;
}

}  // namespace

TEST_CASE("every harness runs on a tiny config and reruns byte-identically") {
  const json cfg = testutil::tiny_config();
  testutil::TempDir a("harness-a"), b("harness-b");
  for (const auto& name : experiments::harness_names()) {
    CAPTURE(name);
    const auto ra = experiments::run_harness(name, context(cfg, a.str()));
    const auto rb = experiments::run_harness(name, context(cfg, b.str()));
    CHECK(ra.name == name);
    CHECK_FALSE(ra.cells.empty());
    const std::string ja = testutil::read_file(a.str(name + ".json"));
    const std::string ca = testutil::read_file(a.str(name + ".csv"));
    CHECK_FALSE(ja.empty());
    CHECK(ja == testutil::read_file(b.str(name + ".json")));
    CHECK(ca == testutil::read_file(b.str(name + ".csv")));
    CHECK(json::parse(ja)["config_hash"] == config::hash(cfg));
  }
}

TEST_CASE("reused checkpoints reproduce the report") {
  const json cfg = testutil::tiny_config();
  testutil::TempDir dir("harness-reuse");
  auto ctx = context(cfg, dir.str());
  experiments::run_harness("heldout_pushes", ctx);
  const std::string first = testutil::read_file(dir.str("heldout_pushes.json"));
  size_t n_ckpt = 0;
  for (const auto& e : fs::directory_iterator(dir.path() / "models")) n_ckpt += e.path().extension() == ".ckpt";
  CHECK(n_ckpt == 2);
  experiments::run_harness("heldout_pushes", ctx);
  CHECK(testutil::read_file(dir.str("heldout_pushes.json")) == first);
}

TEST_CASE("zero and physics cells follow their definitions") {
  const json cfg = testutil::tiny_config();
  testutil::TempDir dir("harness-velocity");
  const auto r = experiments::run_velocity_sweep(context(cfg, dir.str()));
  CHECK(r.cells.count("physics@20") == 1);
  CHECK(r.cells.count("hybrid@150") == 1);
  CHECK(r.find_claim("hybrid rot @150 <= 1.3x @20") != nullptr);
  CHECK(r.find_claim("neural rot @150 >= 2x @20") != nullptr);
  CHECK(r.find_claim("error-norm < error-grad trans @150") != nullptr);
  CHECK(r.find_claim("no such claim") == nullptr);
  const json summary = json::parse(testutil::read_file(dir.str("velocity.json")));
  CHECK(summary["speeds"] == json::array({20.0, 150.0}));

  const auto de = experiments::run_data_efficiency(context(cfg, dir.str()));
  CHECK(de.cells.at("zero@24").metrics.trans_pct == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(de.cells.count("hybrid@24#1") == 1);
  CHECK(de.cells.count("hybrid@48#1") == 0);  // the full size trains once
}

TEST_CASE("split manifests are disjoint and reload") {
  const json cfg = testutil::tiny_config();
  testutil::TempDir dir("harness-splits");
  experiments::run_heldout_pushes(context(cfg, dir.str()));
  const auto s = experiments::load_split(dir.str("splits/heldout_pushes.json"));
  CHECK(s.name == "heldout_pushes");
  CHECK(s.train_ids.size() == 48);
  CHECK(s.test_ids.size() == 24);
  const std::set<std::uint64_t> train(s.train_ids.begin(), s.train_ids.end());
  for (auto id : s.test_ids) CHECK(train.count(id) == 0);
  for (double a : s.params["train_angles"]) CHECK(std::abs(a) != doctest::Approx(20.0));
  for (double a : s.params["test_angles"]) CHECK(std::abs(a) <= 20.0);

  json bad = experiments::to_json(s);
  bad["test_ids"].push_back(s.train_ids.front());
  {
    std::ofstream(dir.str("bad.json")) << bad.dump();
  }
  try {
    experiments::load_split(dir.str("bad.json"));
    FAIL("intersecting split accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
  }
  {
    std::ofstream(dir.str("junk.json")) << "[1,2";
  }
  CHECK_THROWS_AS(experiments::load_split(dir.str("junk.json")), Error);
}

TEST_CASE("harness errors") {
  const json cfg = testutil::tiny_config();
  testutil::TempDir dir("harness-errors");
  try {
    experiments::run_harness("nope", context(cfg, dir.str()));
    FAIL("unknown harness accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidArgument);
  }
  const json empty = testutil::tiny_config({"experiment.velocity.speeds=[]"});
  try {
    experiments::run_velocity_sweep(context(empty, dir.str()));
    FAIL("empty speed list accepted");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("run directories are keyed by the config hash") {
  const json cfg = testutil::tiny_config();
  const std::string d = experiments::run_dir_for("runs", "velocity", cfg);
  CHECK(d == (fs::path("runs") / ("velocity-" + config::hash(cfg))).string());
}
