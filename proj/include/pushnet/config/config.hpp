#pragma once

#include "pushnet/predictors/predictor.hpp"
#include "pushnet/predictors/train.hpp"
#include "pushnet/sim/simulator.hpp"

#include <json.hpp>

#include <string>
#include <vector>

// Run configuration: a JSON tree with every field defaulted. A file may name
// base files under "extends"; any top-level section may copy another one via
// "inherits": "<section>". `--set a.b=value` overrides are applied last.
namespace pushnet::config {

nlohmann::json default_config();

/// Reads a file and resolves its "extends" chain (paths relative to the file).
nlohmann::json load_file(const std::string& path);

/// Objects merge recursively; everything else is replaced.
void merge_into(nlohmann::json& base, const nlohmann::json& overlay);

/// Applies "key.path=value"; value is parsed as JSON, falling back to a string.
void apply_set(nlohmann::json& cfg, const std::string& assignment);

/// defaults <- file (optional) <- sets, with section inheritance resolved and
/// the result validated. Throws Error(Config).
nlohmann::json resolve(const std::string& path, const std::vector<std::string>& sets);
nlohmann::json resolve_tree(const nlohmann::json& user, const std::vector<std::string>& sets);

/// FNV-1a 64 of the compact dump, as 16 hex digits.
std::string hash(const nlohmann::json& cfg);

/// $PUSHNET_OUT, or "runs".
std::string output_root();

sim::GenConfig gen_config(const nlohmann::json& cfg);
nlohmann::json gen_config_to_json(const sim::GenConfig& g);
sim::NoiseConfig noise_config(const nlohmann::json& section);
nlohmann::json noise_to_json(const sim::NoiseConfig& n);
predictors::ArchConfig arch_config(const nlohmann::json& cfg);
predictors::TrainConfig train_config(const nlohmann::json& cfg);

}  // namespace pushnet::config
