#include "pushnet/config/config.hpp"
#include "pushnet/experiments/harness.hpp"
#include "pushnet/geom/shapes.hpp"
#include "pushnet/predictors/gradcheck_suite.hpp"
#include "pushnet/raster/raster.hpp"
#include "pushnet/sim/dataset_io.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <omp.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pushnet;

namespace {

// Exit codes beyond ErrorKind.
constexpr int kExitInternal = 1;
constexpr int kExitCheckFailed = 9;

constexpr std::uint64_t kTestIdOffset = 1'000'000'000ULL;
constexpr std::uint64_t kValIdOffset = 2'000'000'000ULL;
constexpr std::uint64_t kValSeedOffset = 2000003ULL;

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  int jobs = 1;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config_path, "Config file (JSON, may use extends/inherits)");
  cmd->add_option("-s,--set", c.sets, "Override, key.path=value (repeatable)");
  cmd->add_option("-j,--jobs", c.jobs, "Parallel workers for data generation and studies")->check(CLI::PositiveNumber);
  cmd->add_flag("-v,--verbose", c.verbose, "Progress on stderr");
}

json resolve(const Common& c) { return config::resolve(c.config_path, c.sets); }

void write_json(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

std::string default_dir(const std::string& kind, const json& cfg) {
  return (fs::path(config::output_root()) / (kind + "-" + config::hash(cfg))).string();
}

predictors::InputSpec spec_for(const sim::Dataset& ds) {
  return predictors::make_input_spec(ds.camera, ds.width, ds.height);
}

sim::Dataset generate(const sim::GenConfig& g) {
  return sim::make_dataset(sim::generate_dataset(g), sim::make_camera(g.camera), config::gen_config_to_json(g));
}

predictors::RecordSet pointers(const std::vector<sim::DatasetRecord>& records, size_t begin, size_t end) {
  predictors::RecordSet out;
  for (size_t i = begin; i < end; ++i) out.push_back(&records[i]);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_gen_data(const Common& c, const std::string& out_arg, const std::string& split) {
  const json cfg = resolve(c);
  sim::GenConfig g = config::gen_config(cfg);
  if (split == "test") {
    g.seed += cfg["experiment"]["test_seed_offset"].get<std::uint64_t>();
    g.id_offset = kTestIdOffset;
  } else if (split == "val") {
    g.seed += kValSeedOffset;
    g.id_offset = kValIdOffset;
  }
  const std::string dir = out_arg.empty() ? default_dir("data", cfg) : out_arg;
  fs::create_directories(dir);
  const sim::Dataset ds = generate(g);
  const std::string prefix = (fs::path(dir) / split).string();
  sim::save_dataset(ds, prefix);
  write_json(fs::path(dir) / "config.json", cfg);
  fmt::print("{}\n", json{{"prefix", prefix}, {"manifest", ds.manifest}}.dump(2));
  return 0;
}

int cmd_train(const Common& c, const std::string& variant, const std::string& data, const std::string& out_arg,
              bool resume) {
  const json cfg = resolve(c);
  const auto v = predictors::parse_variant(variant);
  const auto arch = config::arch_config(cfg);
  const auto tc = config::train_config(cfg);

  sim::Dataset train_ds, val_ds;
  predictors::RecordSet train_set, val_set;
  json data_key;
  if (!data.empty()) {
    train_ds = sim::load_dataset(data);
    // Validation: the trailing tenth of the file, cut on a push boundary.
    size_t cut = train_ds.records.size() - train_ds.records.size() / 10;
    while (cut > 0 && cut < train_ds.records.size() &&
           train_ds.records[cut].push_id == train_ds.records[cut - 1].push_id)
      ++cut;
    train_set = pointers(train_ds.records, 0, cut);
    val_set = pointers(train_ds.records, cut, train_ds.records.size());
    if (val_set.empty()) val_set = train_set;
    data_key = {{"dataset", train_ds.manifest}};
  } else {
    sim::GenConfig g = config::gen_config(cfg);
    train_ds = generate(g);
    sim::GenConfig gv = g;
    gv.seed += kValSeedOffset;
    gv.id_offset = kValIdOffset;
    gv.n_records = tc.val_records;
    val_ds = generate(gv);
    train_set = pointers(train_ds.records, 0, train_ds.records.size());
    val_set = pointers(val_ds.records, 0, val_ds.records.size());
    data_key = {{"train", config::gen_config_to_json(g)}};
  }
  if (train_set.empty()) fail(ErrorKind::InvalidArgument, "train: dataset has no records");

  const predictors::Model model(v, arch, train_ds.width);
  const json ident = {{"model", model.to_json()}, {"training", predictors::train_config_to_json(tc)},
                      {"data", data_key}};
  const fs::path dir = out_arg.empty() ? fs::path(default_dir("train-" + variant, cfg)) : fs::path(out_arg);
  fs::create_directories(dir);
  write_json(dir / "config.json", cfg);
  const std::string ckpt = (dir / "model.ckpt").string();
  const std::string log_path = (dir / "log.csv").string();

  nn::ParamStore<float> params;
  model.init(params, tc.seed);
  nn::AdamState adam = nn::make_adam(params, tc.lr);
  if (resume && fs::exists(ckpt)) {
    auto loaded = nn::load_checkpoint(ckpt, params);
    if (loaded.config != ident) fail(ErrorKind::Config, "resume: checkpoint was trained with a different setup");
    if (loaded.has_adam) adam = loaded.adam;
  }
  if (!predictors::is_learnable(v)) {
    nn::save_checkpoint(ckpt, params, nullptr, ident);
    fmt::print("{}\n", json{{"checkpoint", ckpt}, {"steps", 0}}.dump());
    return 0;
  }

  std::ofstream log(log_path, adam.step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) fail(ErrorKind::Io, "cannot write " + log_path);
  if (adam.step == 0) log << predictors::log_header() << '\n';
  const auto spec = spec_for(train_ds);
  const auto result = predictors::train(model, params, adam, train_set, val_set, spec, tc,
                                        [&](const predictors::TrainLogRow& row) {
                                          log << predictors::log_line(row) << '\n';
                                          log.flush();
                                          if (c.verbose) fmt::print(stderr, "{}\n", predictors::log_line(row));
                                          // Periodic checkpoints make interrupted runs resumable.
                                          nn::save_checkpoint(ckpt, params, &adam, ident);
                                        });
  nn::save_checkpoint(ckpt, params, &adam, ident);
  fmt::print("{}\n", json{{"checkpoint", ckpt}, {"steps", result.final_step}, {"early_stopped", result.early_stopped}}
                         .dump());
  return 0;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& variant, const std::string& data,
             const std::string& out) {
  const json cfg = resolve(c);
  sim::Dataset ds;
  if (!data.empty()) {
    ds = sim::load_dataset(data);
  } else {
    sim::GenConfig g = config::gen_config(cfg);
    g.seed += cfg["experiment"]["test_seed_offset"].get<std::uint64_t>();
    g.id_offset = kTestIdOffset;
    g.n_records = cfg["experiment"]["test_records"].get<int>();
    ds = generate(g);
  }

  std::optional<predictors::Model> model;
  auto params = std::make_shared<nn::ParamStore<float>>();
  if (!checkpoint.empty()) {
    const json ident = nn::read_checkpoint_config(checkpoint);
    model = predictors::Model::from_json(ident.at("model"));
    model->init(*params, 0);
    nn::load_checkpoint(checkpoint, *params);
  } else {
    const auto v = predictors::parse_variant(variant);
    if (predictors::is_learnable(v)) fail(ErrorKind::InvalidArgument, "eval: learnable variants need --checkpoint");
    model = predictors::Model(v, config::arch_config(cfg), ds.width);
  }
  const experiments::TrainedModel tm{*model, params, checkpoint};
  const auto e = experiments::evaluate(tm, pointers(ds.records, 0, ds.records.size()), spec_for(ds));
  json report = experiments::to_json(e.metrics);
  report["variant"] = predictors::to_string(model->variant());
  if (!out.empty()) {
    write_json(out, report);
    write_json(fs::path(out).parent_path() / "config.json", cfg);
  }
  fmt::print("{}\n", report.dump(2));
  return 0;
}

int run_harnesses(const Common& c, const std::vector<std::string>& names, const std::string& out_arg,
                  const std::string& kind) {
  const json cfg = resolve(c);
  experiments::Context ctx;
  ctx.config = cfg;
  ctx.jobs = c.jobs;
  ctx.verbose = c.verbose;
  ctx.run_dir = out_arg.empty() ? experiments::run_dir_for(config::output_root(), kind, cfg) : out_arg;
  fs::create_directories(ctx.run_dir);
  write_json(fs::path(ctx.run_dir) / "config.json", cfg);
  json all = json::object();
  for (const auto& name : names) {
    const auto r = experiments::run_harness(name, ctx);
    all[name] = r.summary;
  }
  fmt::print("{}\n", json{{"run_dir", ctx.run_dir}, {"reports", all}}.dump(2));
  return 0;
}

int cmd_gradcheck(bool models, std::uint64_t seed) {
  predictors::SuiteOptions opt;
  opt.full_models = models;
  opt.seed = seed;
  const auto reports = predictors::gradcheck_suite(opt);
  bool ok = true;
  fmt::print("{:<32} {:>12}  {}\n", "check", "max_rel_err", "worst");
  for (const auto& r : reports) {
    ok = ok && r.ok;
    std::string worst;
    double w = -1.0;
    for (const auto& t : r.tensors)
      if (t.rel_error > w) {
        w = t.rel_error;
        worst = fmt::format("{}[{}] analytic {:.6g} numeric {:.6g}", t.tensor, t.index, t.analytic, t.numeric);
      }
    fmt::print("{:<32} {:>12.3e}  {}{}\n", r.name, r.max_rel_error, r.ok ? "" : "FAIL ", worst);
  }
  const auto mutant = predictors::gradcheck_mutant(opt);
  fmt::print("{:<32} {:>12.3e}  {}\n", mutant.name, mutant.max_rel_error,
             mutant.ok ? "FAIL (corrupted gradient not detected)" : "rejected as expected");
  ok = ok && !mutant.ok;
  fmt::print("{}\n", ok ? "gradcheck: PASS" : "gradcheck: FAIL");
  return ok ? 0 : kExitCheckFailed;
}

void write_pgm(const std::string& path, const raster::DepthImage& img) {
  const auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  const double range = *hi - *lo;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (float d : img.data) {
    // Near is bright; a flat image is uniformly black.
    const double t = range > 0 ? (*hi - d) / range : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * t))));
  }
  if (!out) fail(ErrorKind::Io, "write failed: " + path);
}

int cmd_render(const Common& c, const std::string& object, const std::vector<double>& pose,
               const std::vector<double>& pusher, const std::string& data, int index, const std::string& out) {
  raster::DepthImage img;
  if (!data.empty()) {
    const sim::Dataset ds = sim::load_dataset(data);
    if (index < 0 || index >= static_cast<int>(ds.records.size()))
      fail(ErrorKind::InvalidArgument, fmt::format("render: index {} outside the dataset", index));
    img = ds.records[index].depth;
  } else {
    const json cfg = resolve(c);
    const sim::GenConfig g = config::gen_config(cfg);
    sim::SceneState scene;
    scene.object_id = object == "none" ? "" : object;
    if (!scene.object_id.empty()) (void)geom::shape_for(scene.object_id);
    if (pose.size() != 3) fail(ErrorKind::InvalidArgument, "render: --pose needs x,y,theta_deg");
    scene.object_pose = Pose2(pose[0], pose[1], deg2rad(pose[2]));
    // Without --pusher the pusher is parked far off the table.
    scene.pusher_pos = pusher.size() == 2 ? Vec2(pusher[0], pusher[1]) : Vec2(1e6, 1e6);
    const Camera cam = sim::make_camera(g.camera);
    img = raster::render_depth(scene, cam, g.camera.image_size, g.camera.image_size);
  }
  write_pgm(out, img);
  fmt::print("{}\n", json{{"out", out}, {"width", img.width}, {"height", img.height}}.dump());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar pushing: data generation, training and evaluation of hybrid dynamics models"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  add_common(gen, common);
  std::string gen_out, gen_split = "train";
  gen->add_option("-o,--out", gen_out, "Output directory");
  gen->add_option("--split", gen_split, "train, val or test (seed and id range)")
      ->check(CLI::IsMember({"train", "val", "test"}));

  auto* train = app.add_subcommand("train", "Train one predictor and write a checkpoint");
  add_common(train, common);
  std::string variant = "hybrid", train_data, train_out;
  bool resume = false;
  train->add_option("--variant", variant, "Predictor variant")->required();
  train->add_option("-d,--data", train_data, "Dataset prefix (default: generate from config)");
  train->add_option("-o,--out", train_out, "Output directory");
  train->add_flag("--resume", resume, "Continue from out/model.ckpt");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint or a fixed predictor");
  add_common(eval, common);
  std::string ckpt, eval_variant = "zero", eval_data, eval_out;
  eval->add_option("--checkpoint", ckpt, "Checkpoint written by train");
  eval->add_option("--variant", eval_variant, "zero or physics when no checkpoint is given");
  eval->add_option("-d,--data", eval_data, "Dataset prefix (default: generate the test split)");
  eval->add_option("-o,--out", eval_out, "Write the metrics JSON here");

  auto* sweep = app.add_subcommand("sweep", "Run one experiment harness");
  add_common(sweep, common);
  std::string harness = "velocity", sweep_out;
  sweep->add_option("harness", harness, "Harness name")->check(CLI::IsMember(experiments::harness_names()));
  sweep->add_option("-o,--out", sweep_out, "Run directory");

  auto* study = app.add_subcommand("study", "Run several harnesses into one run directory");
  add_common(study, common);
  std::vector<std::string> studies;
  std::string study_out;
  study->add_option("names", studies, "Harness names (default: all)")
      ->check(CLI::IsMember(experiments::harness_names()));
  study->add_option("-o,--out", study_out, "Run directory");

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference check of every differentiable op");
  bool gc_ops_only = false;
  std::uint64_t gc_seed = 7;
  gc->add_flag("--ops-only", gc_ops_only, "Skip the full-network checks");
  gc->add_option("--seed", gc_seed, "Seed for the random inputs");

  auto* render = app.add_subcommand("render", "Render a depth image to PGM");
  add_common(render, common);
  std::string object = "none", render_data, render_out = "render.pgm";
  std::vector<double> pose = {0.0, 0.0, 0.0}, pusher;
  int index = 0;
  render->add_option("--object", object, "Object id, or none for an empty table");
  render->add_option("--pose", pose, "Object pose x,y,theta_deg")->delimiter(',')->expected(3);
  render->add_option("--pusher", pusher, "Pusher position x,y (default: off the table)")->delimiter(',')->expected(2);
  render->add_option("-d,--data", render_data, "Render a record from this dataset instead");
  render->add_option("--index", index, "Record index with --data");
  render->add_option("-o,--out", render_out, "Output PGM");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::InvalidArgument);
  }

  omp_set_num_threads(common.jobs);
  try {
    if (*gen) return cmd_gen_data(common, gen_out, gen_split);
    if (*train) return cmd_train(common, variant, train_data, train_out, resume);
    if (*eval) return cmd_eval(common, ckpt, eval_variant, eval_data, eval_out);
    if (*sweep) return run_harnesses(common, {harness}, sweep_out, harness);
    if (*study)
      return run_harnesses(common, studies.empty() ? experiments::harness_names() : studies, study_out, "study");
    if (*gc) return cmd_gradcheck(!gc_ops_only, gc_seed);
    if (*render) return cmd_render(common, object, pose, pusher, render_data, index, render_out);
  } catch (const Error& e) {
    std::cerr << "error[" << static_cast<int>(e.kind()) << "]: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error[" << static_cast<int>(ErrorKind::Io) << "]: " << e.what() << '\n';
    return static_cast<int>(ErrorKind::Io);
  } catch (const std::exception& e) {
    std::cerr << "error[" << kExitInternal << "]: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
