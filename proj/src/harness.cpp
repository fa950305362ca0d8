#include "pushnet/experiments/harness.hpp"

#include "pushnet/config/config.hpp"
#include "pushnet/sim/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>

namespace pushnet::experiments {

namespace fs = std::filesystem;
using nlohmann::json;
using predictors::ArchConfig;
using predictors::InputSpec;
using predictors::Model;
using predictors::RecordSet;
using predictors::Variant;

namespace {

constexpr std::uint64_t kTestIdOffset = 1'000'000'000ULL;
constexpr std::uint64_t kValIdOffset = 2'000'000'000ULL;
constexpr std::uint64_t kValSeedOffset = 2000003ULL;
constexpr std::uint64_t kSubsetStream = 0x73756273;

void progress(const Context& ctx, const std::string& msg) {
  if (ctx.verbose) fmt::print(stderr, "{}\n", msg);
}

struct Data {
  sim::GenConfig gen;
  std::vector<sim::DatasetRecord> records;
  RecordSet set;
  InputSpec spec;
};

std::unique_ptr<Data> generate(const sim::GenConfig& g) {
  auto d = std::make_unique<Data>();
  d->gen = g;
  d->records = sim::generate_dataset(g);
  d->set.reserve(d->records.size());
  for (const auto& r : d->records) d->set.push_back(&r);
  d->spec = predictors::make_input_spec(sim::make_camera(g.camera), g.camera.image_size, g.camera.image_size);
  return d;
}

// Shared experiment settings.
struct Common {
  json exp;
  sim::GenConfig base;  // training distribution at the training speed
  ArchConfig arch;
  std::vector<Variant> variants;
  int train_records = 0;
  int test_records = 0;
  int val_records = 0;
  double train_speed = 0.0;
  std::uint64_t test_seed_offset = 0;
};

std::vector<Variant> parse_variants(const json& list) {
  std::vector<Variant> out;
  try {
    for (const auto& t : list) out.push_back(predictors::parse_variant(t.get<std::string>()));
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("variant list: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }
  return out;
}

template <typename T>
T exp_get(const json& sec, const char* key) {
  try {
    return sec.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, fmt::format("experiment key '{}': {}", key, e.what()));
  }
}

int optional_records(const json& sec, int fallback) {
  if (!sec.contains("train_records") || sec["train_records"].is_null()) return fallback;
  const int n = exp_get<int>(sec, "train_records");
  if (n < 1) fail(ErrorKind::Config, "train_records must be >= 1");
  return n;
}

Common common(const Context& ctx) {
  Common c;
  c.exp = ctx.config.at("experiment");
  c.base = config::gen_config(ctx.config);
  c.arch = config::arch_config(ctx.config);
  c.variants = parse_variants(c.exp.at("variants"));
  c.train_records = exp_get<int>(c.exp, "train_records");
  c.test_records = exp_get<int>(c.exp, "test_records");
  c.train_speed = exp_get<double>(c.exp, "train_speed");
  c.test_seed_offset = exp_get<std::uint64_t>(c.exp, "test_seed_offset");
  c.val_records = config::train_config(ctx.config).val_records;
  if (c.train_records < 1 || c.test_records < 1) fail(ErrorKind::Config, "train_records and test_records must be >= 1");
  if (!(c.train_speed > 0)) fail(ErrorKind::Config, "train_speed must be > 0");
  c.base.push_speeds = {c.train_speed};
  c.base.n_records = c.train_records;
  return c;
}

sim::GenConfig with_records(sim::GenConfig g, int n) {
  g.n_records = n;
  return g;
}

sim::GenConfig test_gen(const Common& c, sim::GenConfig g) {
  g.seed += c.test_seed_offset;
  g.id_offset = kTestIdOffset;
  g.n_records = c.test_records;
  return g;
}

sim::GenConfig val_gen(const Common& c, sim::GenConfig g) {
  g.seed += kValSeedOffset;
  g.id_offset = kValIdOffset;
  g.n_records = c.val_records;
  return g;
}

json data_key(const sim::GenConfig& g, int size, int subset) {
  return {{"train", config::gen_config_to_json(g)}, {"size", size}, {"subset", subset}};
}

// Whole pushes in a seeded order until `size` records; smaller sizes with the
// same subset index are prefixes of larger ones.
RecordSet nested_subset(const RecordSet& all, int size, int subset, std::uint64_t seed) {
  if (size >= static_cast<int>(all.size())) return all;
  std::vector<std::pair<size_t, size_t>> pushes;  // [begin, end) of each push's records
  for (size_t i = 0; i < all.size();) {
    size_t j = i;
    while (j < all.size() && all[j]->push_id == all[i]->push_id) ++j;
    pushes.emplace_back(i, j);
    i = j;
  }
  auto rng = sim::record_rng(seed, kSubsetStream, static_cast<std::uint64_t>(subset));
  for (size_t i = pushes.size(); i > 1; --i) {
    std::uniform_int_distribution<size_t> pick(0, i - 1);
    std::swap(pushes[i - 1], pushes[pick(rng)]);
  }
  RecordSet out;
  for (const auto& [b, e] : pushes)
    for (size_t k = b; k < e && static_cast<int>(out.size()) < size; ++k) out.push_back(all[k]);
  return out;
}

TrainedModel obtain_one(const Context& ctx, const TrainJob& job) {
  Model model(job.variant, job.arch, job.image_size);
  auto params = std::make_shared<nn::ParamStore<float>>();
  if (!predictors::is_learnable(job.variant)) return {model, params, ""};
  if (!job.train || !job.val || !job.spec) fail(ErrorKind::InvalidArgument, "training job without data");

  predictors::TrainConfig tc = config::train_config(ctx.config);
  tc.seed += job.seed_offset;
  const json ident = {{"model", model.to_json()}, {"training", predictors::train_config_to_json(tc)},
                      {"data", job.data_key}};
  const std::string stem = fmt::format("{}-{}", predictors::to_string(job.variant), config::hash(ident));
  const fs::path dir = fs::path(ctx.run_dir) / "models";
  fs::create_directories(dir);
  const std::string ckpt = (dir / (stem + ".ckpt")).string();
  const std::string log_path = (dir / (stem + ".log.csv")).string();

  model.init(*params, tc.seed);
  nn::AdamState adam = nn::make_adam(*params, tc.lr);
  if (ctx.reuse_models && fs::exists(ckpt)) {
    auto loaded = nn::load_checkpoint(ckpt, *params);
    if (loaded.config != ident) fail(ErrorKind::Format, ckpt + ": checkpoint does not match its key");
    if (!loaded.has_adam || loaded.adam.step >= tc.steps) {
      progress(ctx, "loaded " + ckpt);
      return {model, params, ckpt};
    }
    adam = loaded.adam;
    progress(ctx, fmt::format("resuming {} at step {}", ckpt, adam.step));
  }

  std::ofstream log(log_path, adam.step > 0 ? std::ios::app : std::ios::trunc);
  if (!log) fail(ErrorKind::Io, "cannot write " + log_path);
  if (adam.step == 0) log << predictors::log_header() << '\n';
  const std::string tag = predictors::to_string(job.variant);
  predictors::train(model, *params, adam, *job.train, *job.val, *job.spec, tc,
                    [&](const predictors::TrainLogRow& row) {
                      log << predictors::log_line(row) << '\n';
                      log.flush();
                      progress(ctx, fmt::format("  {} step {} loss {:.4g} val trans {:.2f}% rot {:.2f}%", tag,
                                                row.step, row.loss, row.val_trans_pct, row.val_rot_pct));
                    });
  nn::save_checkpoint(ckpt, *params, &adam, ident);
  return {model, params, ckpt};
}

Claim ordering(const std::string& name, const Evaluation& a, const Evaluation& b, Metric m) {
  const Comparison c = compare_paired(a.samples, b.samples, m);
  auto value = [m](const Evaluation& e) {
    return m == Metric::Trans ? e.metrics.trans_pct : m == Metric::Rot ? e.metrics.rot_pct : e.metrics.pos_mm;
  };
  return {name, value(a), value(b), c.se, c.a_better()};
}

Claim threshold(const std::string& name, double a, double se_a, double factor, double b, double se_b) {
  const RatioCheck r = check_below(a, se_a, factor, b, se_b);
  return {name, r.lhs, r.rhs, r.se, r.holds()};
}

Claim point(const std::string& name, double lhs, double rhs) { return {name, lhs, rhs, 0.0, lhs <= rhs}; }

// Per-record mean of several evaluations on the same test set.
Evaluation average(const std::vector<const Evaluation*>& evals) {
  Evaluation out;
  out.samples = evals.front()->samples;
  const double k = static_cast<double>(evals.size());
  auto avg = [&](std::vector<double> ErrorSamples::*field) {
    auto& dst = out.samples.*field;
    for (size_t i = 0; i < dst.size(); ++i) {
      double s = 0.0;
      for (const Evaluation* e : evals) s += (e->samples.*field)[i];
      dst[i] = s / k;
    }
  };
  avg(&ErrorSamples::trans_mm);
  avg(&ErrorSamples::rot_deg);
  avg(&ErrorSamples::pos_mm);
  out.metrics = summarize(out.samples);
  return out;
}

std::string fmt_num(double v) { return fmt::format("{:.6f}", v); }

const char* kMetricHeader = "trans_pct,trans_se,rot_pct,rot_se,pos_mm,pos_se,n";

std::string metric_cols(const MetricsReport& m) {
  return fmt::format("{},{},{},{},{},{},{}", fmt_num(m.trans_pct), fmt_num(m.trans_se), fmt_num(m.rot_pct),
                     fmt_num(m.rot_se), m.has_pos ? fmt_num(m.pos_mm) : "", m.has_pos ? fmt_num(m.pos_se) : "",
                     m.n);
}

std::vector<std::uint64_t> ids(const RecordSet& set) {
  std::vector<std::uint64_t> out;
  out.reserve(set.size());
  for (const auto* r : set) out.push_back(r->id);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) fail(ErrorKind::Io, "write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_split(const Context& ctx, const std::string& name, const json& params, const RecordSet& train,
                 const RecordSet& test) {
  SplitManifest s{name, params, ids(train), ids(test)};
  write_text(fs::path(ctx.run_dir) / "splits" / (name + ".json"), to_json(s).dump(2) + "\n");
}

// Collects the CSV rows and finalizes both report files.
struct Report {
  HarnessResult result;
  std::string header;
  std::vector<std::string> rows;

  Report(std::string name, std::string csv_header) : header(std::move(csv_header)) { result.name = std::move(name); }

  void add_cell(const std::string& label, Evaluation e) { result.cells.emplace(label, std::move(e)); }

  HarnessResult finish(const Context& ctx, json extra = json::object()) {
    json cells = json::object();
    for (const auto& [label, e] : result.cells) cells[label] = to_json(e.metrics);
    json claims = json::array();
    for (const auto& c : result.claims) claims.push_back(to_json(c));
    json summary = {{"harness", result.name},
                    {"config_hash", config::hash(ctx.config)},
                    {"cells", cells},
                    {"claims", claims}};
    for (auto it = extra.begin(); it != extra.end(); ++it) summary[it.key()] = it.value();
    result.summary = summary;
    std::string csv = header + "\n";
    for (const auto& r : rows) csv += r + "\n";
    write_text(fs::path(ctx.run_dir) / (result.name + ".csv"), csv);
    write_text(fs::path(ctx.run_dir) / (result.name + ".json"), summary.dump(2) + "\n");
    return std::move(result);
  }
};

bool contains(const std::vector<Variant>& vs, Variant v) { return std::find(vs.begin(), vs.end(), v) != vs.end(); }

std::string tag(Variant v) { return predictors::to_string(v); }

std::string num_label(double v) { return fmt::format("{:g}", v); }

}  // namespace

std::string run_dir_for(const std::string& root, const std::string& name, const json& config) {
  return (fs::path(root) / (name + "-" + config::hash(config))).string();
}

std::vector<TrainedModel> obtain_models(const Context& ctx, const std::vector<TrainJob>& jobs) {
  std::vector<std::optional<TrainedModel>> out(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const int threads = std::max(1, std::min(ctx.jobs, static_cast<int>(jobs.size())));
  auto run = [&](size_t i) {
    try {
      out[i] = obtain_one(ctx, jobs[i]);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads == 1) {
    // No enclosing parallel region, so the kernels keep their own threads.
    for (size_t i = 0; i < jobs.size(); ++i) run(i);
  } else {
#pragma omp parallel for schedule(dynamic) num_threads(threads)
    for (size_t i = 0; i < jobs.size(); ++i) run(i);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::vector<TrainedModel> models;
  for (auto& m : out) models.push_back(std::move(*m));
  return models;
}

Evaluation evaluate(const TrainedModel& m, const RecordSet& test, const InputSpec& spec) {
  Evaluation e;
  e.predictions = predictors::predict_records(m.model, *m.params, test, spec);
  std::vector<Twist2> pred, label;
  std::vector<double> pos;
  for (size_t i = 0; i < test.size(); ++i) {
    pred.push_back(e.predictions[i].twist);
    label.push_back(test[i]->label());
    if (e.predictions[i].has_pos)
      pos.push_back((e.predictions[i].pos - test[i]->pose_before.position()).norm());
  }
  e.samples = error_samples(pred, label, pos.empty() ? nullptr : &pos);
  e.metrics = summarize(e.samples);
  return e;
}

json to_json(const Claim& c) {
  return {{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"se", c.se}, {"holds", c.holds}};
}

const Claim* HarnessResult::find_claim(const std::string& n) const {
  for (const auto& c : claims)
    if (c.name == n) return &c;
  return nullptr;
}

json to_json(const SplitManifest& s) {
  return {{"name", s.name}, {"params", s.params}, {"train_ids", s.train_ids}, {"test_ids", s.test_ids}};
}

SplitManifest load_split(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open split " + path);
  SplitManifest s;
  try {
    const json j = json::parse(in);
    s.name = j.at("name").get<std::string>();
    s.params = j.at("params");
    s.train_ids = j.at("train_ids").get<std::vector<std::uint64_t>>();
    s.test_ids = j.at("test_ids").get<std::vector<std::uint64_t>>();
  } catch (const json::exception& e) {
    fail(ErrorKind::Format, path + ": " + e.what());
  }
  const std::set<std::uint64_t> train(s.train_ids.begin(), s.train_ids.end());
  for (auto id : s.test_ids)
    if (train.count(id)) fail(ErrorKind::Format, fmt::format("{}: record {} is in both train and test", path, id));
  return s;
}

HarnessResult run_data_efficiency(const Context& ctx) {
  const Common c = common(ctx);
  const json& sec = c.exp.at("data_efficiency");
  auto sizes = exp_get<std::vector<int>>(sec, "sizes");
  const int seeds = exp_get<int>(sec, "seeds");
  const auto variants = sec.contains("variants") && !sec["variants"].is_null() ? parse_variants(sec["variants"])
                                                                              : c.variants;
  if (sizes.empty() || seeds < 1) fail(ErrorKind::Config, "data_efficiency needs sizes and seeds >= 1");
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());
  if (sizes.front() < 1) fail(ErrorKind::Config, "data_efficiency sizes must be >= 1");
  const int full = sizes.back();

  const auto train_cfg = with_records(c.base, full);
  progress(ctx, fmt::format("data_efficiency: generating {} training records", full));
  const auto train = generate(train_cfg);
  const auto val = generate(val_gen(c, train_cfg));
  const auto test = generate(test_gen(c, c.base));
  write_split(ctx, "data_efficiency", {{"sizes", sizes}}, train->set, test->set);

  struct Cell {
    Variant v;
    int size;
    int subset;
  };
  std::vector<Cell> cells;
  std::vector<std::unique_ptr<RecordSet>> subsets;
  std::vector<TrainJob> jobs;
  for (int size : sizes) {
    const int n_subsets = size == full ? 1 : seeds;
    for (int k = 0; k < n_subsets; ++k) {
      subsets.push_back(std::make_unique<RecordSet>(nested_subset(train->set, size, k, train_cfg.seed)));
      for (Variant v : variants) {
        cells.push_back({v, size, k});
        jobs.push_back({v, c.arch, train_cfg.camera.image_size, data_key(train_cfg, size, k),
                        static_cast<std::uint64_t>(k), subsets.back().get(), &val->set, &train->spec});
      }
    }
  }
  const auto models = obtain_models(ctx, jobs);

  Report rep("data_efficiency", std::string("variant,size,subset,") + kMetricHeader);
  std::map<std::pair<Variant, int>, std::vector<Evaluation>> by_size;
  for (size_t i = 0; i < cells.size(); ++i) {
    Evaluation e = evaluate(models[i], test->set, test->spec);
    rep.rows.push_back(fmt::format("{},{},{},{}", tag(cells[i].v), cells[i].size, cells[i].subset, metric_cols(e.metrics)));
    rep.add_cell(fmt::format("{}@{}#{}", tag(cells[i].v), cells[i].size, cells[i].subset), e);
    by_size[{cells[i].v, cells[i].size}].push_back(std::move(e));
  }
  std::map<std::pair<Variant, int>, Evaluation> mean;
  for (Variant v : variants)
    for (int size : sizes) {
      std::vector<const Evaluation*> group;
      for (const auto& e : by_size[{v, size}]) group.push_back(&e);
      Evaluation m = average(group);
      rep.rows.push_back(fmt::format("{},{},mean,{}", tag(v), size, metric_cols(m.metrics)));
      rep.add_cell(fmt::format("{}@{}", tag(v), size), m);
      mean.emplace(std::make_pair(v, size), std::move(m));
    }

  const int small = sizes.front();
  if (contains(variants, Variant::Hybrid) && contains(variants, Variant::Neural)) {
    const auto& h_small = mean.at({Variant::Hybrid, small});
    const auto& n_small = mean.at({Variant::Neural, small});
    rep.result.claims.push_back(ordering(fmt::format("hybrid < neural trans @{}", small), h_small, n_small, Metric::Trans));
    rep.result.claims.push_back(ordering(fmt::format("hybrid < neural rot @{}", small), h_small, n_small, Metric::Rot));
    const auto& h_full = mean.at({Variant::Hybrid, full});
    const auto& n_full = mean.at({Variant::Neural, full});
    rep.result.claims.push_back(point(fmt::format("neural <= 1.1x hybrid trans @{}", full), n_full.metrics.trans_pct,
                                      1.1 * h_full.metrics.trans_pct));
    if (contains(variants, Variant::Error)) {
      const auto& e_full = mean.at({Variant::Error, full});
      rep.result.claims.push_back(point(fmt::format("error <= 1.1x hybrid trans @{}", full), e_full.metrics.trans_pct,
                                        1.1 * h_full.metrics.trans_pct));
    }
  }
  return rep.finish(ctx, {{"sizes", sizes}, {"subsets_per_size", seeds}});
}

HarnessResult run_velocity_sweep(const Context& ctx) {
  const Common c = common(ctx);
  const json& sec = c.exp.at("velocity");
  auto speeds = exp_get<std::vector<double>>(sec, "speeds");
  const auto variants = parse_variants(sec.at("variants"));
  if (speeds.empty()) fail(ErrorKind::Config, "velocity.speeds must not be empty");
  std::sort(speeds.begin(), speeds.end());

  progress(ctx, fmt::format("velocity: generating {} training records", c.train_records));
  const auto train = generate(c.base);
  const auto val = generate(val_gen(c, c.base));
  std::vector<TrainJob> jobs;
  for (Variant v : variants)
    jobs.push_back({v, c.arch, c.base.camera.image_size, data_key(c.base, c.train_records, 0), 0, &train->set,
                    &val->set, &train->spec});
  const auto models = obtain_models(ctx, jobs);

  Report rep("velocity", std::string("variant,speed,") + kMetricHeader);
  std::map<std::pair<Variant, double>, const Evaluation*> at;
  for (double speed : speeds) {
    sim::GenConfig g = test_gen(c, c.base);
    g.push_speeds = {speed};
    const auto test = generate(g);
    for (size_t i = 0; i < variants.size(); ++i) {
      Evaluation e = evaluate(models[i], test->set, test->spec);
      rep.rows.push_back(fmt::format("{},{},{}", tag(variants[i]), num_label(speed), metric_cols(e.metrics)));
      const std::string label = fmt::format("{}@{}", tag(variants[i]), num_label(speed));
      rep.add_cell(label, std::move(e));
      at[{variants[i], speed}] = &rep.result.cells.at(label);
    }
  }

  json ratios = json::object();
  const bool has_ref = std::find(speeds.begin(), speeds.end(), c.train_speed) != speeds.end();
  const double hi = speeds.back();
  if (has_ref && hi > c.train_speed) {
    const double ref = c.train_speed;
    for (Variant v : variants) {
      const auto& m0 = at.at({v, ref})->metrics;
      const auto& m1 = at.at({v, hi})->metrics;
      if (m0.rot_pct > 0) ratios[tag(v)] = m1.rot_pct / m0.rot_pct;
    }
    if (contains(variants, Variant::Neural)) {
      const auto& m0 = at.at({Variant::Neural, ref})->metrics;
      const auto& m1 = at.at({Variant::Neural, hi})->metrics;
      // 2 * rot(ref) < rot(hi)
      rep.result.claims.push_back(threshold(fmt::format("neural rot @{} >= 2x @{}", num_label(hi), num_label(ref)),
                                            m0.rot_pct, m0.rot_se, 0.5, m1.rot_pct, m1.rot_se));
    }
    if (contains(variants, Variant::Hybrid)) {
      const auto& m0 = at.at({Variant::Hybrid, ref})->metrics;
      const auto& m1 = at.at({Variant::Hybrid, hi})->metrics;
      rep.result.claims.push_back(threshold(fmt::format("hybrid rot @{} <= 1.3x @{}", num_label(hi), num_label(ref)),
                                            m1.rot_pct, m1.rot_se, 1.3, m0.rot_pct, m0.rot_se));
    }
  }
  if (contains(variants, Variant::ErrorNorm) && contains(variants, Variant::ErrorGrad))
    for (double speed : speeds) {
      if (speed < 100.0) continue;
      const auto& a = *at.at({Variant::ErrorNorm, speed});
      const auto& b = *at.at({Variant::ErrorGrad, speed});
      rep.result.claims.push_back(
          ordering(fmt::format("error-norm < error-grad trans @{}", num_label(speed)), a, b, Metric::Trans));
      rep.result.claims.push_back(
          ordering(fmt::format("error-norm < error-grad rot @{}", num_label(speed)), a, b, Metric::Rot));
    }
  return rep.finish(ctx, {{"speeds", speeds}, {"train_speed", c.train_speed}, {"rot_ratio_max_over_train", ratios}});
}

HarnessResult run_heldout_pushes(const Context& ctx) {
  const Common c = common(ctx);
  const json& sec = c.exp.at("heldout_pushes");
  const auto held_angles = exp_get<std::vector<double>>(sec, "angles");
  const auto held_fracs = exp_get<std::vector<double>>(sec, "contact_fracs");
  const int grid = exp_get<int>(sec, "train_fracs");
  const auto variants = parse_variants(sec.at("variants"));
  if (held_angles.empty() || held_fracs.empty() || grid < 1)
    fail(ErrorKind::Config, "heldout_pushes needs angles, contact_fracs and train_fracs >= 1");
  auto is_held = [](const std::vector<double>& held, double x) {
    return std::any_of(held.begin(), held.end(), [x](double h) { return std::abs(h - x) < 1e-9; });
  };

  sim::GenConfig tg = with_records(c.base, optional_records(sec, c.train_records));
  tg.angles.clear();
  for (double a : c.base.angles)
    if (!is_held(held_angles, a)) tg.angles.push_back(a);
  tg.contact_fracs.clear();
  for (int k = 0; k < grid; ++k)
    if (!is_held(held_fracs, static_cast<double>(k) / grid)) tg.contact_fracs.push_back(static_cast<double>(k) / grid);
  if (tg.angles.empty() || tg.contact_fracs.empty())
    fail(ErrorKind::Config, "heldout_pushes leaves no training angles or contact fractions");

  sim::GenConfig eg = test_gen(c, c.base);
  eg.angles = held_angles;
  eg.contact_fracs = held_fracs;

  progress(ctx, fmt::format("heldout_pushes: generating {} training records", tg.n_records));
  const auto train = generate(tg);
  const auto val = generate(val_gen(c, tg));
  const auto test = generate(eg);
  write_split(ctx, "heldout_pushes",
              {{"train_angles", tg.angles}, {"train_fracs", tg.contact_fracs}, {"test_angles", eg.angles},
               {"test_fracs", eg.contact_fracs}},
              train->set, test->set);

  std::vector<TrainJob> jobs;
  for (Variant v : variants)
    jobs.push_back({v, c.arch, tg.camera.image_size, data_key(tg, tg.n_records, 0), 0, &train->set, &val->set,
                    &train->spec});
  const auto models = obtain_models(ctx, jobs);

  Report rep("heldout_pushes", std::string("variant,") + kMetricHeader);
  for (size_t i = 0; i < variants.size(); ++i) {
    Evaluation e = evaluate(models[i], test->set, test->spec);
    rep.rows.push_back(fmt::format("{},{}", tag(variants[i]), metric_cols(e.metrics)));
    rep.add_cell(tag(variants[i]), std::move(e));
  }
  if (contains(variants, Variant::Hybrid) && contains(variants, Variant::Neural)) {
    const auto& h = rep.result.cells.at("hybrid");
    const auto& n = rep.result.cells.at("neural");
    rep.result.claims.push_back(ordering("hybrid < neural trans", h, n, Metric::Trans));
    rep.result.claims.push_back(ordering("hybrid < neural rot", h, n, Metric::Rot));
  }
  return rep.finish(ctx);
}

HarnessResult run_heldout_objects(const Context& ctx) {
  const Common c = common(ctx);
  const json& sec = c.exp.at("heldout_objects");
  const auto train_sets = exp_get<std::vector<std::vector<std::string>>>(sec, "train_sets");
  const auto test_sets = exp_get<std::map<std::string, std::vector<std::string>>>(sec, "test_sets");
  const auto variants = parse_variants(sec.at("variants"));
  if (train_sets.empty() || test_sets.empty()) fail(ErrorKind::Config, "heldout_objects needs train and test sets");
  const int n_train = optional_records(sec, c.train_records);

  std::vector<std::unique_ptr<Data>> trains, vals;
  std::vector<std::string> train_labels;
  std::vector<TrainJob> jobs;
  for (const auto& objects : train_sets) {
    if (objects.empty()) fail(ErrorKind::Config, "heldout_objects train set must not be empty");
    sim::GenConfig tg = with_records(c.base, n_train);
    tg.objects = objects;
    std::string label;
    for (const auto& o : objects) label += (label.empty() ? "" : "+") + o;
    train_labels.push_back(label);
    progress(ctx, fmt::format("heldout_objects: generating {} training records on {}", n_train, label));
    trains.push_back(generate(tg));
    vals.push_back(generate(val_gen(c, tg)));
    for (Variant v : variants)
      jobs.push_back({v, c.arch, tg.camera.image_size, data_key(tg, n_train, 0), 0, &trains.back()->set,
                      &vals.back()->set, &trains.back()->spec});
  }
  const auto models = obtain_models(ctx, jobs);

  Report rep("heldout_objects", std::string("train_set,test_set,variant,") + kMetricHeader);
  for (const auto& [test_name, objects] : test_sets) {
    sim::GenConfig eg = test_gen(c, c.base);
    eg.objects = objects;
    const auto test = generate(eg);
    for (size_t t = 0; t < train_sets.size(); ++t) {
      write_split(ctx, fmt::format("heldout_objects-{}-{}", train_labels[t], test_name),
                  {{"train_objects", train_sets[t]}, {"test_objects", objects}}, trains[t]->set, test->set);
      for (size_t i = 0; i < variants.size(); ++i) {
        Evaluation e = evaluate(models[t * variants.size() + i], test->set, test->spec);
        rep.rows.push_back(
            fmt::format("{},{},{},{}", train_labels[t], test_name, tag(variants[i]), metric_cols(e.metrics)));
        rep.add_cell(fmt::format("{}|{}|{}", tag(variants[i]), train_labels[t], test_name), std::move(e));
      }
      if (contains(variants, Variant::Hybrid) && contains(variants, Variant::Neural)) {
        const auto& h = rep.result.cells.at(fmt::format("hybrid|{}|{}", train_labels[t], test_name));
        const auto& n = rep.result.cells.at(fmt::format("neural|{}|{}", train_labels[t], test_name));
        rep.result.claims.push_back(
            ordering(fmt::format("hybrid < neural rot {} -> {}", train_labels[t], test_name), h, n, Metric::Rot));
      }
    }
  }
  return rep.finish(ctx, {{"train_records", n_train}});
}

HarnessResult run_wrong_friction(const Context& ctx) {
  const Common c = common(ctx);
  const json& sec = c.exp.at("wrong_friction");
  auto factors = exp_get<std::vector<double>>(sec, "factors");
  auto variants = parse_variants(sec.at("variants"));
  if (factors.empty()) fail(ErrorKind::Config, "wrong_friction.factors must not be empty");
  for (double f : factors)
    if (!(f > 0)) fail(ErrorKind::Config, "wrong_friction.factors must be > 0");
  std::sort(factors.begin(), factors.end());
  if (!contains(variants, Variant::Physics)) variants.insert(variants.begin(), Variant::Physics);

  const sim::GenConfig tg = with_records(c.base, optional_records(sec, c.train_records));
  progress(ctx, fmt::format("wrong_friction: generating {} training records", tg.n_records));
  const auto train = generate(tg);
  const auto val = generate(val_gen(c, tg));
  const auto test = generate(test_gen(c, c.base));
  write_split(ctx, "wrong_friction", {{"factors", factors}}, train->set, test->set);

  std::vector<TrainJob> jobs;
  for (double f : factors)
    for (Variant v : variants) {
      ArchConfig a = c.arch;
      a.l_factor = f;
      jobs.push_back({v, a, tg.camera.image_size, data_key(tg, tg.n_records, 0), 0, &train->set, &val->set,
                      &train->spec});
    }
  const auto models = obtain_models(ctx, jobs);

  Report rep("wrong_friction", std::string("l_factor,variant,") + kMetricHeader);
  for (size_t k = 0; k < factors.size(); ++k)
    for (size_t i = 0; i < variants.size(); ++i) {
      Evaluation e = evaluate(models[k * variants.size() + i], test->set, test->spec);
      rep.rows.push_back(fmt::format("{},{},{}", num_label(factors[k]), tag(variants[i]), metric_cols(e.metrics)));
      rep.add_cell(fmt::format("{}@l*{}", tag(variants[i]), num_label(factors[k])), std::move(e));
    }

  const std::string f = num_label(factors.back());
  auto cell = [&](Variant v) -> const Evaluation& { return rep.result.cells.at(fmt::format("{}@l*{}", tag(v), f)); };
  for (Variant v : {Variant::Hybrid, Variant::Error})
    if (contains(variants, v))
      rep.result.claims.push_back(
          ordering(fmt::format("{} < physics rot @l*{}", tag(v), f), cell(v), cell(Variant::Physics), Metric::Rot));
  if (contains(variants, Variant::Hybrid) && contains(variants, Variant::Error))
    rep.result.claims.push_back(ordering(fmt::format("error < hybrid rot @l*{}", f), cell(Variant::Error),
                                         cell(Variant::Hybrid), Metric::Rot));
  return rep.finish(ctx, {{"factors", factors}});
}

HarnessResult run_viewpoint(const Context& ctx) {
  const Common c = common(ctx);
  const json& sec = c.exp.at("viewpoint");
  const auto variants = parse_variants(sec.at("variants"));
  const auto position = exp_get<std::vector<double>>(sec, "position");
  if (position.size() != 3) fail(ErrorKind::Config, "viewpoint.position needs 3 entries");
  ArchConfig arch = c.arch;
  try {
    arch.loss = predictors::parse_loss(exp_get<std::string>(sec, "loss"));
  } catch (const Error& e) {
    fail(ErrorKind::Config, e.what());
  }

  const int n_train = optional_records(sec, c.train_records);
  const std::vector<std::pair<std::string, CameraMode>> cameras = {{"topdown", CameraMode::TopDown},
                                                                   {"pinhole", CameraMode::Pinhole}};
  std::vector<std::unique_ptr<Data>> trains, vals, tests;
  std::vector<TrainJob> jobs;
  for (const auto& [name, mode] : cameras) {
    sim::GenConfig tg = with_records(c.base, n_train);
    tg.camera.mode = mode;
    tg.camera.position = Vec3(position[0], position[1], position[2]);
    progress(ctx, fmt::format("viewpoint: generating {} {} training records", n_train, name));
    trains.push_back(generate(tg));
    vals.push_back(generate(val_gen(c, tg)));
    tests.push_back(generate(test_gen(c, tg)));
    write_split(ctx, "viewpoint-" + name, {{"camera", name}}, trains.back()->set, tests.back()->set);
    for (Variant v : variants)
      jobs.push_back({v, arch, tg.camera.image_size, data_key(tg, n_train, 0), 0, &trains.back()->set,
                      &vals.back()->set, &trains.back()->spec});
  }
  const auto models = obtain_models(ctx, jobs);

  Report rep("viewpoint", std::string("camera,variant,") + kMetricHeader);
  for (size_t k = 0; k < cameras.size(); ++k)
    for (size_t i = 0; i < variants.size(); ++i) {
      Evaluation e = evaluate(models[k * variants.size() + i], tests[k]->set, tests[k]->spec);
      rep.rows.push_back(fmt::format("{},{},{}", cameras[k].first, tag(variants[i]), metric_cols(e.metrics)));
      rep.add_cell(fmt::format("{}|{}", tag(variants[i]), cameras[k].first), std::move(e));
    }
  for (Variant v : variants) {
    const auto& top = rep.result.cells.at(tag(v) + "|topdown").metrics;
    const auto& pin = rep.result.cells.at(tag(v) + "|pinhole").metrics;
    rep.result.claims.push_back(
        point(tag(v) + " pinhole trans <= 1.15x topdown", pin.trans_pct, 1.15 * top.trans_pct));
    rep.result.claims.push_back(point(tag(v) + " pinhole rot <= 1.15x topdown", pin.rot_pct, 1.15 * top.rot_pct));
    if (top.has_pos && pin.has_pos)
      rep.result.claims.push_back(point(tag(v) + " pinhole pos <= topdown + 1mm", pin.pos_mm, top.pos_mm + 1.0));
  }
  return rep.finish(ctx, {{"train_records", n_train}, {"loss", predictors::to_string(arch.loss)}});
}

HarnessResult export_repeated_push(const Context& ctx) {
  const Common c = common(ctx);
  const json& sec = c.exp.at("repeated_push");
  const int n = exp_get<int>(sec, "n");
  const double bound = exp_get<double>(sec, "contact_bound_mm");
  const auto variants = parse_variants(sec.at("variants"));
  if (n < 1) fail(ErrorKind::Config, "repeated_push.n must be >= 1");

  sim::GenConfig pg = test_gen(c, c.base);
  pg.objects = {exp_get<std::string>(sec, "object")};
  pg.angles = {exp_get<double>(sec, "angle")};
  pg.contact_fracs = {exp_get<double>(sec, "contact_frac")};
  pg.no_contact_frac = 0.0;
  pg.n_records = n;
  pg.augment_transforms_per_push = n;  // one push under n transforms
  const auto pushes = generate(pg);

  progress(ctx, fmt::format("repeated_push: generating {} training records", c.train_records));
  const auto train = generate(c.base);
  const auto val = generate(val_gen(c, c.base));
  std::vector<TrainJob> jobs;
  for (Variant v : variants)
    jobs.push_back({v, c.arch, c.base.camera.image_size, data_key(c.base, c.train_records, 0), 0, &train->set,
                    &val->set, &train->spec});
  const auto models = obtain_models(ctx, jobs);

  Report rep("repeated_push",
             "rep,variant,label_vx,label_vy,label_omega_deg,pred_vx,pred_vy,pred_omega_deg,c_x,c_y,n_x,n_y,s,"
             "gt_c_x,gt_c_y");
  json spread = json::object();
  for (size_t i = 0; i < variants.size(); ++i) {
    Evaluation e = evaluate(models[i], pushes->set, pushes->spec);
    double sum[3] = {0, 0, 0}, sq[3] = {0, 0, 0};
    double contact_err = 0.0;
    int with_contact = 0;
    for (size_t r = 0; r < pushes->set.size(); ++r) {
      const sim::DatasetRecord& rec = *pushes->set[r];
      const Pose2& T = rec.scene_transform;
      const auto& p = e.predictions[r];
      const Twist2 label = rec.label();
      const Vec2 lv = T.inverse_transform_vector(label.linear());
      const Vec2 pv = T.inverse_transform_vector(p.twist.linear());
      const Vec2 gc = T.inverse_transform_point(rec.contact_gt.c);
      const double vals[3] = {pv.x(), pv.y(), rad2deg(p.twist.omega)};
      for (int k = 0; k < 3; ++k) sum[k] += vals[k], sq[k] += vals[k] * vals[k];
      std::string contact = ",,,,";
      if (p.has_contact) {
        const Vec2 cc = T.inverse_transform_point(p.contact.c);
        const Vec2 cn = T.inverse_transform_vector(p.contact.n);
        contact = fmt::format("{},{},{},{},{}", fmt_num(cc.x()), fmt_num(cc.y()), fmt_num(cn.x()), fmt_num(cn.y()),
                              fmt_num(p.contact.s));
        contact_err += (cc - gc).norm();
        ++with_contact;
      } else {
        contact += ",";
      }
      rep.rows.push_back(fmt::format("{},{},{},{},{},{},{},{},{},{},{}", r, tag(variants[i]), fmt_num(lv.x()),
                                     fmt_num(lv.y()), fmt_num(rad2deg(label.omega)), fmt_num(pv.x()), fmt_num(pv.y()),
                                     fmt_num(rad2deg(p.twist.omega)), contact, fmt_num(gc.x()), fmt_num(gc.y())));
    }
    const double k = static_cast<double>(pushes->set.size());
    json sd = json::array();
    for (int d = 0; d < 3; ++d) sd.push_back(std::sqrt(std::max(0.0, sq[d] / k - (sum[d] / k) * (sum[d] / k))));
    json entry = {{"pred_std", sd}};
    if (with_contact > 0) {
      const double mean_err = contact_err / with_contact;
      entry["contact_error_mm"] = mean_err;
      rep.result.claims.push_back(point(tag(variants[i]) + " contact error <= bound", mean_err, bound));
    }
    spread[tag(variants[i])] = entry;
    rep.add_cell(tag(variants[i]), std::move(e));
  }
  return rep.finish(ctx, {{"n", n}, {"spread_object_frame", spread}});
}

const std::vector<std::string>& harness_names() {
  static const std::vector<std::string> names = {"data_efficiency", "velocity",       "heldout_pushes", "heldout_objects",
                                                 "wrong_friction",  "viewpoint", "repeated_push"};
  return names;
}

HarnessResult run_harness(const std::string& name, const Context& ctx) {
  if (name == "data_efficiency") return run_data_efficiency(ctx);
  if (name == "velocity") return run_velocity_sweep(ctx);
  if (name == "heldout_pushes") return run_heldout_pushes(ctx);
  if (name == "heldout_objects") return run_heldout_objects(ctx);
  if (name == "wrong_friction") return run_wrong_friction(ctx);
  if (name == "viewpoint") return run_viewpoint(ctx);
  if (name == "repeated_push") return export_repeated_push(ctx);
  fail(ErrorKind::InvalidArgument, "unknown harness '" + name + "'");
}

}  // namespace pushnet::experiments
