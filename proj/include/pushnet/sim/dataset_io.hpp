#pragma once

#include "pushnet/sim/simulator.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace pushnet::sim {

struct Dataset {
  Camera camera;
  int width = 0;
  int height = 0;
  std::vector<DatasetRecord> records;
  nlohmann::json manifest;
};

nlohmann::json record_to_json(const DatasetRecord& r);
/// Image data is not part of the JSON; the caller attaches it.
DatasetRecord record_from_json(const nlohmann::json& j);

nlohmann::json camera_to_json(const Camera& c);
Camera camera_from_json(const nlohmann::json& j);

Dataset make_dataset(std::vector<DatasetRecord> records, const Camera& camera,
                     const nlohmann::json& gen_config);

/// Writes <prefix>.jsonl, <prefix>.imgs and <prefix>.manifest.json.
void save_dataset(const Dataset& ds, const std::string& prefix);
Dataset load_dataset(const std::string& prefix);

/// Fraction of records whose ground-truth contact indicator is zero.
double no_contact_fraction(const std::vector<DatasetRecord>& records);

}  // namespace pushnet::sim
