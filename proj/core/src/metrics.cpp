#include "snitchdt/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "snitchdt/errors.hpp"

namespace snitchdt {

ConfusionCounts confusion(const std::vector<bool>& predicted,
                          const std::vector<bool>& actual) {
  if (predicted.size() != actual.size())
    throw ConfigError("confusion: predicted and actual label series differ in length");
  if (predicted.empty())
    throw ConfigError("confusion: empty label series");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (actual[i])
      predicted[i] ? ++c.tp : ++c.fn;
    else
      predicted[i] ? ++c.fp : ++c.tn;
  }
  return c;
}

BasicMetrics basic_metrics(const ConfusionCounts& c) {
  if (c.total() <= 0) throw ConfigError("basic_metrics: empty confusion counts");
  BasicMetrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  if (c.tp + c.fn > 0) m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  if (c.fp + c.tn > 0) m.fpr = static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
  if (c.fn + c.tp > 0) m.fnr = static_cast<double>(c.fn) / static_cast<double>(c.fn + c.tp);
  return m;
}

std::optional<double> f1_score(std::optional<double> precision,
                               std::optional<double> recall) {
  if (!precision || !recall) return std::nullopt;
  const double denom = *precision + *recall;
  if (denom == 0.0) return std::nullopt;
  return 2.0 * (*precision) * (*recall) / denom;
}

std::optional<long> detection_delay(const std::vector<bool>& alarm, long onset_step,
                                    int sustain_m) {
  if (onset_step < 0 || static_cast<std::size_t>(onset_step) >= alarm.size())
    throw ConfigError("detection_delay: onset step outside the alarm series");
  if (sustain_m < 1) throw ConfigError("detection_delay: sustain_m must be >= 1");
  const std::size_t n = alarm.size();
  const auto m = static_cast<std::size_t>(sustain_m);
  std::size_t run = 0;
  for (std::size_t s = static_cast<std::size_t>(onset_step); s < n; ++s) {
    run = alarm[s] ? run + 1 : 0;
    if (run >= m) {
      const std::size_t first = s + 1 - m;  // start of the qualifying run
      return static_cast<long>(first) - onset_step;
    }
  }
  return std::nullopt;
}

double tracking_rmse(const std::vector<double>& actual,
                     const std::vector<double>& reference, std::size_t first,
                     std::size_t last) {
  if (first >= last) throw ConfigError("tracking_rmse: empty window");
  if (last > actual.size() || last > reference.size())
    throw ConfigError("tracking_rmse: window extends past the series");
  double acc = 0.0;
  for (std::size_t i = first; i < last; ++i) {
    const double d = actual[i] - reference[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(last - first));
}

RocCurve roc_curve(const std::vector<double>& score, const std::vector<bool>& truth,
                   std::size_t n_thresholds) {
  if (score.size() != truth.size())
    throw ConfigError("roc_curve: score and truth series differ in length");
  if (score.empty()) throw ConfigError("roc_curve: empty input");
  long pos = 0, neg = 0;
  for (std::size_t i = 0; i < score.size(); ++i) {
    if (!std::isfinite(score[i])) throw ConfigError("roc_curve: non-finite score");
    truth[i] ? ++pos : ++neg;
  }
  if (pos == 0 || neg == 0)
    throw ConfigError("roc_curve: truth labels must contain both classes");

  // Sort scores descending; sweeping the threshold down through each distinct
  // value converts one batch of samples at a time from predicted-negative to
  // predicted-positive, which walks the exact empirical ROC staircase.
  std::vector<std::size_t> order(score.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return a < b;
  });

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<RocPoint> full;
  full.push_back({inf, 0.0, 0.0});  // threshold above every score: nothing flagged
  long tp = 0, fp = 0;
  double auc = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double v = score[order[i]];
    while (i < order.size() && score[order[i]] == v) {  // ties move together
      truth[order[i]] ? ++tp : ++fp;
      ++i;
    }
    const double tpr = static_cast<double>(tp) / static_cast<double>(pos);
    const double fpr = static_cast<double>(fp) / static_cast<double>(neg);
    auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
    // Points below the highest score use the next-lower distinct value as the
    // "predict positive iff score > threshold" cut that realizes them; the last
    // cut needs a sentinel below the minimum.
    const double cut = i < order.size() ? score[order[i]] : -inf;
    full.push_back({cut, fpr, tpr});
    prev_fpr = fpr;
    prev_tpr = tpr;
  }

  RocCurve curve;
  curve.auc = auc;
  if (n_thresholds < 2) n_thresholds = 2;
  if (full.size() <= n_thresholds) {
    curve.points = std::move(full);
  } else {
    // Thin the polyline evenly but always keep both endpoints.
    curve.points.reserve(n_thresholds);
    const std::size_t last = full.size() - 1;
    for (std::size_t k = 0; k < n_thresholds; ++k) {
      const std::size_t idx = k * last / (n_thresholds - 1);
      curve.points.push_back(full[idx]);
    }
  }
  // Emitted order: ascending threshold, so the curve runs (1,1) back to (0,0).
  std::reverse(curve.points.begin(), curve.points.end());
  return curve;
}

}  // namespace snitchdt
