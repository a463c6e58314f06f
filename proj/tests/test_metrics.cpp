#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "doctest.h"
#include "snitchdt/errors.hpp"
#include "snitchdt/metrics.hpp"
#include "snitchdt/rng.hpp"

using namespace snitchdt;

namespace {

// Brute-force AUC: P(score_pos > score_neg) + 0.5 P(tie) over all pairs.
double pair_count_auc(const std::vector<double>& score,
                      const std::vector<bool>& truth) {
  double wins = 0.0;
  long pairs = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (!truth[i]) continue;
    for (std::size_t j = 0; j < score.size(); ++j) {
      if (truth[j]) continue;
      ++pairs;
      if (score[i] > score[j])
        wins += 1.0;
      else if (score[i] == score[j])
        wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("confusion counts match hand labeling") {
  const ConfusionCounts c = confusion({true, false, true}, {true, false, true});
  CHECK(c.tp == 2);
  CHECK(c.tn == 1);
  CHECK(c.fp == 0);
  CHECK(c.fn == 0);

  const ConfusionCounts inv = confusion({false, true, false}, {true, false, true});
  CHECK(inv.tp == 0);
  CHECK(inv.tn == 0);
  CHECK(inv.fp == 1);
  CHECK(inv.fn == 2);

  CHECK_THROWS_AS((void)confusion({true}, {true, false}), ConfigError);
  CHECK_THROWS_AS((void)confusion({}, {}), ConfigError);
}

TEST_CASE("basic metrics on a 20-scenario scorecard") {
  // 9 correct detections, 9 correct rejections, 1 false alarm, 1 miss.
  const ConfusionCounts c{9, 9, 1, 1};
  const BasicMetrics m = basic_metrics(c);
  CHECK(m.accuracy == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(*m.precision == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(*m.recall == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(*m.fpr == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(*m.fnr == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("undefined ratios are empty, never silent zeros") {
  const BasicMetrics m = basic_metrics(ConfusionCounts{0, 10, 0, 0});
  CHECK(m.accuracy == 1.0);
  CHECK_FALSE(m.precision.has_value());
  CHECK_FALSE(m.recall.has_value());
  CHECK_FALSE(m.fnr.has_value());
  CHECK(m.fpr.has_value());
  CHECK(*m.fpr == 0.0);
  CHECK_THROWS_AS((void)basic_metrics(ConfusionCounts{}), ConfigError);
}

TEST_CASE("f1 is the harmonic mean with undefined propagation") {
  CHECK(*f1_score(0.9, 0.9) == doctest::Approx(0.9).epsilon(1e-12));
  CHECK(*f1_score(1.0, 0.5) == doctest::Approx(2.0 * 0.5 / 1.5).epsilon(1e-12));
  CHECK_FALSE(f1_score(0.0, 0.0).has_value());
  CHECK_FALSE(f1_score(std::nullopt, 0.9).has_value());
  CHECK_FALSE(f1_score(0.9, std::nullopt).has_value());
}

TEST_CASE("exhaustive small-count ratio oracle") {
  // Every count split with total <= 12 must match direct ratios exactly.
  long checked = 0;
  for (long tp = 0; tp <= 12; ++tp)
    for (long tn = 0; tp + tn <= 12; ++tn)
      for (long fp = 0; tp + tn + fp <= 12; ++fp)
        for (long fn = 0; tp + tn + fp + fn <= 12; ++fn) {
          const ConfusionCounts c{tp, tn, fp, fn};
          if (c.total() == 0) continue;
          const BasicMetrics m = basic_metrics(c);
          ++checked;
          CHECK(m.accuracy ==
                static_cast<double>(tp + tn) / static_cast<double>(c.total()));
          if (tp + fp > 0)
            CHECK(*m.precision == static_cast<double>(tp) / (tp + fp));
          else
            CHECK_FALSE(m.precision.has_value());
          if (tp + fn > 0)
            CHECK(*m.recall == static_cast<double>(tp) / (tp + fn));
          else
            CHECK_FALSE(m.recall.has_value());
          if (fp + tn > 0)
            CHECK(*m.fpr == static_cast<double>(fp) / (fp + tn));
          else
            CHECK_FALSE(m.fpr.has_value());
          if (fn + tp > 0)
            CHECK(*m.fnr == static_cast<double>(fn) / (fn + tp));
          else
            CHECK_FALSE(m.fnr.has_value());

          const auto f1 = f1_score(m.precision, m.recall);
          if (m.precision && m.recall && *m.precision + *m.recall > 0.0)
            CHECK(*f1 == 2.0 * (*m.precision * *m.recall) /
                             (*m.precision + *m.recall));
          else
            CHECK_FALSE(f1.has_value());
        }
  CHECK(checked > 1500);
}

TEST_CASE("detection delay measures the first sustained run at or after onset") {
  std::vector<bool> from_onset(300, false);
  for (int i = 100; i < 300; ++i) from_onset[i] = true;
  CHECK(*detection_delay(from_onset, 100, 5) == 0);

  std::vector<bool> late(300, false);
  for (int i = 220; i < 230; ++i) late[i] = true;
  CHECK(*detection_delay(late, 100, 5) == 120);

  const std::vector<bool> never(300, false);
  CHECK_FALSE(detection_delay(never, 100, 5).has_value());

  // Short blips below the sustain requirement never qualify.
  std::vector<bool> blips(300, false);
  for (int i = 120; i < 124; ++i) blips[i] = true;
  CHECK_FALSE(detection_delay(blips, 100, 5).has_value());
}

TEST_CASE("pre-onset alarms never affect the measured delay") {
  // Alarm from step 90 through 200; onset at 100. The qualifying window is
  // judged only on post-onset samples, so the run's tail detects at delay 0
  // and the same result holds with the pre-onset prefix erased.
  std::vector<bool> straddle(300, false);
  for (int i = 90; i <= 200; ++i) straddle[i] = true;
  CHECK(*detection_delay(straddle, 100, 5) == 0);

  std::vector<bool> erased = straddle;
  for (int i = 0; i < 100; ++i) erased[i] = false;
  CHECK(detection_delay(erased, 100, 5) == detection_delay(straddle, 100, 5));

  // A pre-onset run too short to reach past onset contributes nothing.
  std::vector<bool> two_runs(300, false);
  for (int i = 80; i < 90; ++i) two_runs[i] = true;
  for (int i = 150; i < 170; ++i) two_runs[i] = true;
  CHECK(*detection_delay(two_runs, 100, 5) == 50);

  // A run ending less than sustain_m steps past onset leaves no qualifying
  // post-onset window.
  std::vector<bool> short_tail(300, false);
  for (int i = 90; i < 103; ++i) short_tail[i] = true;
  CHECK_FALSE(detection_delay(short_tail, 100, 5).has_value());
}

TEST_CASE("tracking rmse over explicit windows") {
  const std::vector<double> a{1.0, 1.0, 1.0};
  CHECK(tracking_rmse(a, a, 0, 3) == 0.0);

  const std::vector<double> b{1.05, 1.05, 1.05};
  CHECK(tracking_rmse(b, a, 0, 3) == doctest::Approx(0.05).epsilon(1e-12));

  const std::vector<double> c{0.0, 0.1};
  const std::vector<double> z{0.0, 0.0};
  CHECK(tracking_rmse(c, z, 0, 2) == doctest::Approx(std::sqrt(0.005)).epsilon(1e-12));
  CHECK(tracking_rmse(c, z, 0, 2) == doctest::Approx(0.0707).epsilon(1e-3));

  CHECK_THROWS_AS((void)tracking_rmse(a, a, 2, 2), ConfigError);
  CHECK_THROWS_AS((void)tracking_rmse(a, a, 1, 4), ConfigError);
}

TEST_CASE("roc handles separable and degenerate score sets") {
  const RocCurve sep = roc_curve({0.9, 0.8, 0.1, 0.2}, {true, true, false, false});
  CHECK(sep.auc == doctest::Approx(1.0).epsilon(1e-12));

  const RocCurve flat = roc_curve({0.5, 0.5, 0.5, 0.5}, {true, false, true, false});
  CHECK(flat.auc == doctest::Approx(0.5).epsilon(1e-12));

  CHECK_THROWS_AS((void)roc_curve({0.1, 0.2}, {true, true}), ConfigError);
  CHECK_THROWS_AS((void)roc_curve({0.1}, {true, false}), ConfigError);
}

TEST_CASE("four-score curve equals its pair-counting value") {
  // Pair counting over {0.1 F, 0.4 T, 0.35 F, 0.8 T}: every positive outranks
  // every negative, so the area is exactly 1.
  const std::vector<double> score{0.1, 0.4, 0.35, 0.8};
  const RocCurve a = roc_curve(score, {false, true, false, true});
  CHECK(a.auc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(a.auc ==
        doctest::Approx(pair_count_auc(score, {false, true, false, true})));

  // Swapping which labels are positive produces one discordant pair: 3/4.
  const RocCurve b = roc_curve(score, {false, false, true, true});
  CHECK(b.auc == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(b.auc ==
        doctest::Approx(pair_count_auc(score, {false, false, true, true})));
}

TEST_CASE("trapezoid auc equals pair counting on random instances") {
  Rng rng(51);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + rng.uniform_int(0, 48);
    std::vector<double> score(n);
    std::vector<bool> truth(n);
    bool any_pos = false, any_neg = false;
    for (int i = 0; i < n; ++i) {
      // Coarse quantization forces plenty of score ties.
      score[i] = std::floor(rng.uniform(0.0, 6.0)) / 2.0;
      truth[i] = rng.uniform() < 0.5;
      (truth[i] ? any_pos : any_neg) = true;
    }
    if (!any_pos) truth[0] = true;
    if (!any_neg) truth[n - 1] = false;
    if (n == 2) {
      truth[0] = true;
      truth[1] = false;
    }
    const RocCurve c = roc_curve(score, truth);
    CHECK(std::abs(c.auc - pair_count_auc(score, truth)) < 1e-9);
  }
}

TEST_CASE("roc endpoints anchor at the corners and thinning keeps them") {
  Rng rng(53);
  std::vector<double> score(500);
  std::vector<bool> truth(500);
  for (int i = 0; i < 500; ++i) {
    truth[i] = i % 3 == 0;
    score[i] = rng.gaussian() + (truth[i] ? 0.5 : 0.0);
  }
  for (std::size_t nt : {2ul, 5ul, 200ul, 10000ul}) {
    const RocCurve c = roc_curve(score, truth, nt);
    REQUIRE(c.points.size() >= 2);
    CHECK(c.points.front().fpr == 1.0);
    CHECK(c.points.front().tpr == 1.0);
    CHECK(c.points.back().fpr == 0.0);
    CHECK(c.points.back().tpr == 0.0);
    CHECK(c.points.front().threshold ==
          -std::numeric_limits<double>::infinity());
    CHECK(c.points.back().threshold == std::numeric_limits<double>::infinity());
    if (nt == 2) CHECK(c.points.size() == 2);
  }

  // Thinning never changes the area.
  const double full = roc_curve(score, truth, 100000).auc;
  const double thin = roc_curve(score, truth, 2).auc;
  CHECK(full == thin);
}
