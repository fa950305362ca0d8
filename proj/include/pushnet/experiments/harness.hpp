#pragma once

#include "pushnet/experiments/metrics.hpp"
#include "pushnet/predictors/train.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

// Experiment harnesses. Each one generates its datasets from the resolved
// config, trains (or reloads) the models it needs, evaluates them and writes
// <name>.json plus <name>.csv into the run directory.
namespace pushnet::experiments {

struct Context {
  nlohmann::json config;  // fully resolved
  std::string run_dir;
  int jobs = 1;               // models trained concurrently
  bool reuse_models = true;   // load matching checkpoints from run_dir/models
  bool verbose = false;       // progress on stderr
};

/// <root>/<name>-<config hash>
std::string run_dir_for(const std::string& root, const std::string& name, const nlohmann::json& config);

struct TrainedModel {
  predictors::Model model;
  std::shared_ptr<nn::ParamStore<float>> params;
  std::string checkpoint;  // empty for fixed predictors
};

/// One training job. `data_key` must identify the training set; together with
/// the variant, architecture and training section it names the checkpoint.
struct TrainJob {
  predictors::Variant variant = predictors::Variant::Hybrid;
  predictors::ArchConfig arch;
  int image_size = 0;
  nlohmann::json data_key;
  std::uint64_t seed_offset = 0;  // added to training.seed
  const predictors::RecordSet* train = nullptr;
  const predictors::RecordSet* val = nullptr;
  const predictors::InputSpec* spec = nullptr;
};

/// Runs the jobs (up to ctx.jobs at once); results keep the job order.
std::vector<TrainedModel> obtain_models(const Context& ctx, const std::vector<TrainJob>& jobs);

struct Evaluation {
  MetricsReport metrics;
  ErrorSamples samples;
  std::vector<predictors::PredictionRow> predictions;
};

Evaluation evaluate(const TrainedModel& m, const predictors::RecordSet& test, const predictors::InputSpec& spec);

/// A checked statement about two numbers. Orderings on one test set use the
/// paired standard error; thresholds across test sets combine both errors;
/// `se` is zero for point-estimate claims.
struct Claim {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double se = 0.0;
  bool holds = false;
};

nlohmann::json to_json(const Claim& c);

struct HarnessResult {
  std::string name;
  nlohmann::json summary;
  std::map<std::string, Evaluation> cells;  // keyed by the CSV cell label
  std::vector<Claim> claims;

  const Claim* find_claim(const std::string& name) const;
};

HarnessResult run_data_efficiency(const Context& ctx);
HarnessResult run_velocity_sweep(const Context& ctx);
HarnessResult run_heldout_pushes(const Context& ctx);
HarnessResult run_heldout_objects(const Context& ctx);
HarnessResult run_wrong_friction(const Context& ctx);
HarnessResult run_viewpoint(const Context& ctx);
/// Same push repeated under n random transforms; CSV rows in the object frame.
HarnessResult export_repeated_push(const Context& ctx);

const std::vector<std::string>& harness_names();
/// Throws Error(InvalidArgument) on an unknown name.
HarnessResult run_harness(const std::string& name, const Context& ctx);

/// Train/test record ids of a split, as written to run_dir/splits/<name>.json.
struct SplitManifest {
  std::string name;
  nlohmann::json params;
  std::vector<std::uint64_t> train_ids;
  std::vector<std::uint64_t> test_ids;
};

nlohmann::json to_json(const SplitManifest& s);
/// Throws Error(Format) if the file is malformed or the id sets intersect.
SplitManifest load_split(const std::string& path);

}  // namespace pushnet::experiments
