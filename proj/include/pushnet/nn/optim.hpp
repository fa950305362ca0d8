#pragma once

#include "pushnet/nn/graph.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace pushnet::nn {

struct AdamState {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::int64_t step = 0;
  std::vector<std::vector<float>> m;
  std::vector<std::vector<float>> v;
};

AdamState make_adam(const ParamStore<float>& params, double lr);

/// One bias-corrected Adam update from the gradients held in params.
void adam_step(ParamStore<float>& params, AdamState& state);

/// Binary checkpoint: magic, version, config JSON, named float32 parameter
/// blobs and (optionally) the optimizer state.
void save_checkpoint(const std::string& path, const ParamStore<float>& params, const AdamState* adam,
                     const nlohmann::json& config);

struct LoadedCheckpoint {
  nlohmann::json config;
  bool has_adam = false;
  AdamState adam;
};

/// Fills params (matched by name, shapes validated). Throws Error(Format) on
/// a malformed or mismatched file.
LoadedCheckpoint load_checkpoint(const std::string& path, ParamStore<float>& params);

/// Reads only the config block of a checkpoint.
nlohmann::json read_checkpoint_config(const std::string& path);

}  // namespace pushnet::nn
