#include "pushnet/experiments/metrics.hpp"

#include "pushnet/core/error.hpp"

#include <cmath>

namespace pushnet::experiments {

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

ErrorSamples error_samples(const std::vector<Twist2>& predicted, const std::vector<Twist2>& labels,
                           const std::vector<double>* pos_errors) {
  if (labels.empty()) fail(ErrorKind::InvalidArgument, "metrics: empty dataset");
  if (predicted.size() != labels.size()) fail(ErrorKind::InvalidArgument, "metrics: prediction count mismatch");
  if (pos_errors && pos_errors->size() != labels.size())
    fail(ErrorKind::InvalidArgument, "metrics: position error count mismatch");
  ErrorSamples e;
  double motion = 0.0, rotation = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const Twist2& p = predicted[i];
    const Twist2& t = labels[i];
    e.trans_mm.push_back(std::hypot(p.vx - t.vx, p.vy - t.vy));
    e.rot_deg.push_back(std::abs(rad2deg(p.omega) - rad2deg(t.omega)));
    motion += std::hypot(t.vx, t.vy);
    rotation += std::abs(rad2deg(t.omega));
  }
  const double n = static_cast<double>(labels.size());
  e.mean_motion_mm = motion / n;
  e.mean_rotation_deg = rotation / n;
  if (pos_errors) e.pos_mm = *pos_errors;
  return e;
}

MetricsReport summarize(const ErrorSamples& e) {
  MetricsReport m;
  m.n = e.trans_mm.size();
  if (m.n == 0) fail(ErrorKind::InvalidArgument, "metrics: empty dataset");
  if (!(e.mean_motion_mm > 0.0) || !(e.mean_rotation_deg > 0.0))
    fail(ErrorKind::InvalidArgument, "metrics: dataset has no motion to normalize by");
  m.mean_motion_mm = e.mean_motion_mm;
  m.mean_rotation_deg = e.mean_rotation_deg;
  m.trans_pct = 100.0 * mean(e.trans_mm) / e.mean_motion_mm;
  m.rot_pct = 100.0 * mean(e.rot_deg) / e.mean_rotation_deg;
  m.trans_se = 100.0 * standard_error(e.trans_mm) / e.mean_motion_mm;
  m.rot_se = 100.0 * standard_error(e.rot_deg) / e.mean_rotation_deg;
  if (!e.pos_mm.empty()) {
    m.has_pos = true;
    m.pos_mm = mean(e.pos_mm);
    m.pos_se = standard_error(e.pos_mm);
  }
  return m;
}

nlohmann::json to_json(const MetricsReport& m) {
  nlohmann::json j = {{"n", m.n},
                      {"trans_pct", m.trans_pct},
                      {"trans_se", m.trans_se},
                      {"rot_pct", m.rot_pct},
                      {"rot_se", m.rot_se},
                      {"mean_motion_mm", m.mean_motion_mm},
                      {"mean_rotation_deg", m.mean_rotation_deg}};
  if (m.has_pos) {
    j["pos_mm"] = m.pos_mm;
    j["pos_se"] = m.pos_se;
  } else {
    j["pos_mm"] = nullptr;
    j["pos_se"] = nullptr;
  }
  return j;
}

Comparison compare_paired(const ErrorSamples& a, const ErrorSamples& b, Metric m) {
  const std::vector<double>* va = nullptr;
  const std::vector<double>* vb = nullptr;
  double scale = 1.0;
  switch (m) {
    case Metric::Trans:
      va = &a.trans_mm, vb = &b.trans_mm, scale = 100.0 / a.mean_motion_mm;
      break;
    case Metric::Rot:
      va = &a.rot_deg, vb = &b.rot_deg, scale = 100.0 / a.mean_rotation_deg;
      break;
    case Metric::Pos:
      va = &a.pos_mm, vb = &b.pos_mm;
      break;
  }
  if (va->size() != vb->size() || va->empty())
    fail(ErrorKind::InvalidArgument, "compare_paired: samples do not cover the same records");
  std::vector<double> d(va->size());
  for (size_t i = 0; i < d.size(); ++i) d[i] = ((*va)[i] - (*vb)[i]) * scale;
  return {mean(d), standard_error(d)};
}

RatioCheck check_below(double a, double se_a, double factor, double b, double se_b) {
  return {a, factor * b, std::sqrt(se_a * se_a + factor * factor * se_b * se_b)};
}

}  // namespace pushnet::experiments
