#pragma once

#include "pushnet/nn/optim.hpp"
#include "pushnet/predictors/predictor.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pushnet::predictors {

using RecordSet = std::vector<const sim::DatasetRecord*>;

struct TrainConfig {
  int steps = 20000;
  int batch = 32;
  double lr = 1e-4;
  int eval_every = 500;
  int patience = 0;        // evaluations without validation improvement before stopping; 0 = never
  int val_records = 512;   // validation subset size (taken from the front of the validation set)
  std::uint64_t seed = 1;  // initialization and batch sampling
};

nlohmann::json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct TrainLogRow {
  std::int64_t step = 0;
  double loss = 0.0;  // means over the steps since the previous row
  double trans = 0.0;
  double mag = 0.0;
  double rot = 0.0;
  double pos = 0.0;
  double contact = 0.0;
  double decay = 0.0;
  double val_trans_pct = 0.0;
  double val_rot_pct = 0.0;
  double val_pos_mm = 0.0;
};

std::string log_header();
std::string log_line(const TrainLogRow& row);

struct TrainResult {
  std::vector<TrainLogRow> log;
  std::int64_t final_step = 0;
  bool early_stopped = false;
  double best_val = 0.0;
};

/// Optional per-row callback (for streaming the CSV log).
using LogSink = std::function<void(const TrainLogRow&)>;

/// Runs Adam from adam.step up to config.steps. Batches are drawn from an RNG
/// keyed by (seed, step), so a resumed run follows the uninterrupted one.
/// Throws Error(Divergence) if the loss becomes non-finite.
TrainResult train(const Model& model, nn::ParamStore<float>& params, nn::AdamState& adam, const RecordSet& train_set,
                  const RecordSet& val_set, const InputSpec& spec, const TrainConfig& config,
                  const LogSink& sink = nullptr);

struct PredictionRow {
  Twist2 twist;
  bool has_pos = false;
  Vec2 pos = Vec2::Zero();
  bool has_contact = false;
  ContactInfo contact;  // predicted c, n, s (hybrid family)
};

/// Inference in fixed-size chunks. Zero and physics need no parameters.
std::vector<PredictionRow> predict_records(const Model& model, nn::ParamStore<float>& params, const RecordSet& records,
                                           const InputSpec& spec, int chunk = 64);

}  // namespace pushnet::predictors
