#pragma once

#include "pushnet/core/types.hpp"

#include <json.hpp>

#include <optional>
#include <vector>

namespace pushnet::experiments {

/// Per-record absolute errors plus the dataset normalizers.
struct ErrorSamples {
  std::vector<double> trans_mm;
  std::vector<double> rot_deg;
  std::vector<double> pos_mm;  // empty when the predictor has no position output
  double mean_motion_mm = 0.0;   // mean label translation
  double mean_rotation_deg = 0.0;  // mean label |rotation|
};

struct MetricsReport {
  size_t n = 0;
  double trans_pct = 0.0;
  double rot_pct = 0.0;
  double trans_se = 0.0;  // standard error, same units as trans_pct
  double rot_se = 0.0;
  bool has_pos = false;
  double pos_mm = 0.0;
  double pos_se = 0.0;
  double mean_motion_mm = 0.0;
  double mean_rotation_deg = 0.0;
};

/// Throws Error(InvalidArgument) on empty or mismatched inputs. `pos_errors`
/// may be null.
ErrorSamples error_samples(const std::vector<Twist2>& predicted, const std::vector<Twist2>& labels,
                           const std::vector<double>* pos_errors = nullptr);

MetricsReport summarize(const ErrorSamples& e);

nlohmann::json to_json(const MetricsReport& m);

enum class Metric { Trans, Rot, Pos };

/// Normalized mean difference a - b (percentage points, or mm for Pos) and
/// its paired standard error; both sets must cover the same records.
struct Comparison {
  double diff = 0.0;
  double se = 0.0;
  /// a is lower than b by more than two standard errors.
  bool a_better() const { return diff < -2.0 * se; }
};

Comparison compare_paired(const ErrorSamples& a, const ErrorSamples& b, Metric m);

/// Claim value_a < factor * value_b for independent test sets; the margin
/// must exceed two combined standard errors.
struct RatioCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double se = 0.0;
  bool holds() const { return rhs - lhs > 2.0 * se; }
};

RatioCheck check_below(double a, double se_a, double factor, double b, double se_b);

}  // namespace pushnet::experiments
