#pragma once

#include "pushnet/config/config.hpp"
#include "pushnet/sim/simulator.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("pushnet-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& name = "") const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

/// Small, fast generation settings.
inline pushnet::sim::GenConfig small_gen(int n, std::uint64_t seed = 3, int image = 16) {
  pushnet::sim::GenConfig g;
  g.n_records = n;
  g.seed = seed;
  g.camera.image_size = image;
  return g;
}

/// A resolved config small enough to run any harness in seconds.
inline nlohmann::json tiny_config(std::vector<std::string> extra = {}) {
  std::vector<std::string> sets = {
      "generation.camera.image_size=32",
      "model.glimpse=8",
      "model.position_channels=[4,4,4,4]",
      "model.glimpse_channels=[4,4,4]",
      "model.mlp_width=16",
      "model.mlp_layers=2",
      "training.steps=12",
      "training.batch=8",
      "training.eval_every=6",
      "training.val_records=16",
      "training.lr=0.001",
      "experiment.train_records=48",
      "experiment.test_records=24",
      "experiment.variants=[\"zero\",\"physics\",\"neural\",\"hybrid\"]",
      "experiment.data_efficiency.sizes=[24,48]",
      "experiment.data_efficiency.seeds=2",
      "experiment.velocity.speeds=[20,150]",
      "experiment.velocity.variants=[\"physics\",\"neural\",\"hybrid\",\"error-grad\",\"error-norm\"]",
      "experiment.heldout_pushes.variants=[\"neural\",\"hybrid\"]",
      "experiment.heldout_objects.train_sets=[[\"butter\"]]",
      "experiment.heldout_objects.test_sets={\"ellipses\":[\"ellip1\"]}",
      "experiment.heldout_objects.variants=[\"neural\",\"hybrid\"]",
      "experiment.repeated_push.n=6",
      "experiment.repeated_push.variants=[\"physics\",\"hybrid\"]",
  };
  sets.insert(sets.end(), extra.begin(), extra.end());
  return pushnet::config::resolve_tree(nlohmann::json::object(), sets);
}

}  // namespace testutil
