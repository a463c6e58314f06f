#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace snitchdt {

struct ConfusionCounts {
  long tp = 0;
  long tn = 0;
  long fp = 0;
  long fn = 0;

  long total() const { return tp + tn + fp + fn; }
};

// Element-wise comparison of predicted vs actual labels. Throws ConfigError on
// length mismatch or empty input.
ConfusionCounts confusion(const std::vector<bool>& predicted,
                          const std::vector<bool>& actual);

// Ratios undefined for an empty denominator are reported as empty optionals,
// never as a silent 0.
struct BasicMetrics {
  double accuracy = 0.0;
  std::optional<double> precision;  // tp / (tp + fp)
  std::optional<double> recall;     // tp / (tp + fn)
  std::optional<double> fpr;        // fp / (fp + tn)
  std::optional<double> fnr;        // fn / (fn + tp)
};

// Throws ConfigError when total == 0.
BasicMetrics basic_metrics(const ConfusionCounts& c);

// Harmonic mean of precision and recall. Undefined when either input is
// undefined or when precision + recall == 0.
std::optional<double> f1_score(std::optional<double> precision,
                               std::optional<double> recall);

// First step s >= onset_step where alarm[s..s+sustain_m-1] are all true, as an
// offset from onset. Alarms strictly before onset never contribute (they are
// counted separately as false alarms). Empty optional = never detected.
std::optional<long> detection_delay(const std::vector<bool>& alarm, long onset_step,
                                    int sustain_m);

// sqrt(mean((a[i] - b[i])^2)) over [first, last). Throws ConfigError on an
// empty window or a window extending past either series.
double tracking_rmse(const std::vector<double>& actual,
                     const std::vector<double>& reference, std::size_t first,
                     std::size_t last);

struct RocPoint {
  double threshold = 0.0;
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // sorted by ascending threshold, (1,1) -> (0,0)
  double auc = 0.0;
};

// Sweep over every distinct score plus +/-inf sentinels; predicted positive iff
// score > threshold (higher score = more anomalous). AUC by the trapezoidal
// rule over the full sweep, which for step thresholds equals the pair-counting
// probability P(score_pos > score_neg) + 0.5 P(tie). n_thresholds only thins
// the emitted polyline (endpoints always kept); it never affects the AUC.
// Throws ConfigError on length mismatch, single-class truth, or non-finite scores.
RocCurve roc_curve(const std::vector<double>& score, const std::vector<bool>& truth,
                   std::size_t n_thresholds = 200);

// One detector's scorecard over a scenario suite.
struct MetricsReport {
  ConfusionCounts scenario_counts;   // per-scenario labeling
  BasicMetrics scenario_metrics;
  std::optional<double> f1;
  double mean_detection_delay_steps = 0.0;  // undetected censored at horizon
  long detected_scenarios = 0;
  long attack_scenarios = 0;
  long false_alarm_scenarios = 0;    // pre-onset or healthy-run alarms
  double mean_rmse_pu = 0.0;         // post-detection tracking error
  std::optional<double> auc;         // pooled per-step ROC
  double compute_time_s = 0.0;       // detector update loop only
};

}  // namespace snitchdt
