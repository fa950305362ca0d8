#include "pushnet/core/error.hpp"
#include "pushnet/experiments/metrics.hpp"
#include "pushnet/sim/simulator.hpp"

#include "util.hpp"

#include <doctest.h>

using namespace pushnet;
using namespace pushnet::experiments;

TEST_CASE("hand-built three-record set") {
  const std::vector<Twist2> labels = {{3, 4, 0}, {0, 0, 0.1}, {6, 8, -0.2}};
  const std::vector<Twist2> preds = {{0, 4, 0.05}, {1, 0, 0.1}, {6, 8, 0}};
  const std::vector<double> pos = {0.5, 1.5, 1.0};
  const auto m = summarize(error_samples(preds, labels, &pos));
  // translation errors 3, 1, 0 against motions 5, 0, 10
  CHECK(m.trans_pct == doctest::Approx(100.0 * (4.0 / 3.0) / 5.0));
  // rotation errors 0.05, 0, 0.2 rad against |0|, 0.1, 0.2 rad
  CHECK(m.rot_pct == doctest::Approx(100.0 * 0.25 / 0.3));
  // sample sd of {3, 1, 0} is sqrt(7/3)
  CHECK(m.trans_se == doctest::Approx(100.0 * std::sqrt(7.0 / 3.0) / std::sqrt(3.0) / 5.0));
  CHECK(m.has_pos);
  CHECK(m.pos_mm == doctest::Approx(1.0));
  CHECK(m.pos_se == doctest::Approx(0.5 / std::sqrt(3.0)));
  CHECK(m.n == 3);
}

TEST_CASE("zero predictor scores exactly 100 percent") {
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto recs = sim::generate_dataset(testutil::small_gen(200, seed, 8));
    std::vector<Twist2> labels, zero(recs.size());
    for (const auto& r : recs) labels.push_back(r.label());
    const auto m = summarize(error_samples(zero, labels));
    CHECK(m.trans_pct == 100.0);
    CHECK(m.rot_pct == 100.0);
    const auto perfect = summarize(error_samples(labels, labels));
    CHECK(perfect.trans_pct == 0.0);
    CHECK(perfect.rot_pct == 0.0);
  }
}

TEST_CASE("metric input errors") {
  CHECK_THROWS_AS(error_samples({}, {}), Error);
  CHECK_THROWS_AS(error_samples({{1, 0, 0}}, {{1, 0, 0}, {2, 0, 0}}), Error);
  // nothing moves: no normalizer
  CHECK_THROWS_AS(summarize(error_samples({{1, 0, 0}}, {{0, 0, 0}})), Error);
}

TEST_CASE("paired comparison and thresholds") {
  const std::vector<Twist2> labels = {{10, 0, 0.1}, {0, 10, -0.1}, {5, 5, 0.2}, {1, 1, 0.0}};
  const std::vector<Twist2> good = {{10, 1, 0.1}, {0, 9, -0.1}, {5, 6, 0.2}, {1, 2, 0.0}};
  const std::vector<Twist2> bad = {{10, 4, 0.1}, {0, 6, -0.1}, {5, 8, 0.2}, {1, 5, 0.0}};
  const auto a = error_samples(good, labels);
  const auto b = error_samples(bad, labels);
  const auto c = compare_paired(a, b, Metric::Trans);
  const double motion = (10 + 10 + std::hypot(5, 5) + std::hypot(1, 1)) / 4;
  // per-record differences: -3, -3, -2, -3 mm
  CHECK(c.diff == doctest::Approx(-2.75 * 100 / motion));
  CHECK(c.se == doctest::Approx(0.25 * 100 / motion));
  CHECK(c.a_better());
  CHECK_FALSE(compare_paired(b, a, Metric::Trans).a_better());

  const auto t = check_below(10.0, 1.0, 2.0, 8.0, 1.0);
  CHECK(t.rhs == 16.0);
  CHECK(t.se == doctest::Approx(std::sqrt(5.0)));
  CHECK(t.holds());
  CHECK_FALSE(check_below(10.0, 3.0, 1.0, 13.0, 3.0).holds());
}
