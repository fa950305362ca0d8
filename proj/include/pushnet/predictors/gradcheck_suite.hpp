#pragma once

#include "pushnet/nn/gradcheck.hpp"

#include <cstdint>
#include <vector>

namespace pushnet::predictors {

struct SuiteOptions {
  std::uint64_t seed = 7;
  nn::GradCheckOptions check;
  // Whole networks: losses around 1e2 with many ReLU/max-pool kinks leave
  // central differences accurate to roughly 1e-7 absolute.
  nn::GradCheckOptions model_check{1e-6, 1e-3, 1e-4, 32};
  bool full_models = true;  // also check the complete loss of every learnable variant
};

/// Finite-difference checks of every differentiable op, the two losses and
/// (optionally) each variant's full training loss on a tiny synthetic batch.
std::vector<nn::GradCheckReport> gradcheck_suite(const SuiteOptions& options = {});

/// A dense layer with a deliberately corrupted weight gradient. The checker
/// must reject it.
nn::GradCheckReport gradcheck_mutant(const SuiteOptions& options = {});

}  // namespace pushnet::predictors
