#include "snitchdt/coordination.hpp"

#include <algorithm>
#include <cmath>

#include "snitchdt/errors.hpp"

namespace snitchdt {

void NetworkConfig::validate() const {
  if (report_period_steps < 1)
    throw ConfigError("network.report_period_steps must be >= 1");
  if (!(latency_mean_s >= 0.0))
    throw ConfigError("network.latency_mean_s must be >= 0");
  if (!(latency_jitter_s >= 0.0))
    throw ConfigError("network.latency_jitter_s must be >= 0");
  if (!(drop_prob >= 0.0 && drop_prob <= 1.0))
    throw ConfigError("network.drop_prob must be in [0, 1]");
}

void ConsensusConfig::validate() const {
  if (!(tau_alarm > 0.0 && tau_alarm < 1.0))
    throw ConfigError("consensus.tau_alarm must be in (0, 1)");
  if (quorum_k < 2) throw ConfigError("consensus.quorum_k must be >= 2");
  if (coincidence_window_steps < 1)
    throw ConfigError("consensus.coincidence_window_steps must be >= 1");
  if (staleness_limit_steps < 1)
    throw ConfigError("consensus.staleness_limit_steps must be >= 1");
}

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::none: return "none";
    case VerdictKind::local: return "local";
    case VerdictKind::coordinated: return "coordinated";
  }
  return "?";
}

double aggregate_trust(std::vector<double> taus) {
  if (taus.empty()) throw ConfigError("aggregate_trust: no trust values");
  for (double& t : taus) t = std::max(t, 1e-12);
  std::sort(taus.begin(), taus.end());
  double log_sum = 0.0;
  for (double t : taus) log_sum += std::log(t);
  return std::exp(log_sum / static_cast<double>(taus.size()));
}

std::string format_verdicts(const std::vector<SystemVerdict>& verdicts) {
  std::string out;
  for (const auto& v : verdicts) {
    if (!out.empty()) out += '|';
    out += to_string(v.kind);
    if (v.kind != VerdictKind::none) {
      out += '(';
      for (std::size_t i = 0; i < v.implicated.size(); ++i) {
        if (i) out += '+';
        out += v.implicated[i];
      }
      out += ')';
    }
  }
  return out.empty() ? "none" : out;
}

SimulatedNetwork::SimulatedNetwork(const NetworkConfig& cfg, double dt,
                                   std::uint64_t seed)
    : cfg_(cfg), dt_(dt), rng_(seed) {
  cfg_.validate();
  if (!(dt > 0.0)) throw ConfigError("network: dt must be > 0");
}

void SimulatedNetwork::send(const TrustReport& report, long now_step) {
  if (!(report.tau >= 0.0 && report.tau <= 1.0) || report.sent_step < 0)
    throw SimulationError("malformed trust report from " + report.node, now_step);
  const double u_drop = rng_.uniform();
  const double latency_s =
      std::max(0.0, cfg_.latency_mean_s + cfg_.latency_jitter_s * rng_.gaussian());
  ++sent_;
  if (u_drop < cfg_.drop_prob) {
    ++dropped_;
    return;
  }
  const long delay_steps = std::max(0l, std::lround(latency_s / dt_));
  queue_.emplace(std::make_tuple(now_step + delay_steps, report.node, next_seq_++),
                 report);
}

std::vector<TrustReport> SimulatedNetwork::poll(long now_step) {
  std::vector<TrustReport> due;
  auto it = queue_.begin();
  while (it != queue_.end() && std::get<0>(it->first) <= now_step) {
    due.push_back(it->second);
    it = queue_.erase(it);
  }
  return due;
}

ConsensusTracker::ConsensusTracker(const ConsensusConfig& cfg,
                                   std::vector<std::string> node_ids)
    : cfg_(cfg), ids_(std::move(node_ids)) {
  cfg_.validate();
  if (ids_.empty()) throw ConfigError("consensus: node list is empty");
  std::sort(ids_.begin(), ids_.end());
  for (const auto& id : ids_) state_[id];
}

void ConsensusTracker::deliver(const TrustReport& report) {
  auto it = state_.find(report.node);
  if (it == state_.end())
    throw SimulationError("trust report from unknown node " + report.node);
  NodeState& s = it->second;
  if (s.seen && report.sent_step < s.sent_step) return;  // late straggler
  s.seen = true;
  s.sent_step = report.sent_step;
  s.tau = report.tau;
  s.local_alarm = report.local_alarm;
  if (report.tau < cfg_.tau_alarm) {
    if (!s.onset_step) s.onset_step = report.sent_step;
  } else {
    s.onset_step.reset();  // episode closed; a relapse starts a new onset
  }
}

Evaluation ConsensusTracker::evaluate(long now_step) const {
  Evaluation ev;
  std::vector<double> usable_taus;
  struct Alarmed {
    std::string node;
    long onset;
  };
  std::vector<Alarmed> alarmed;
  for (const auto& id : ids_) {
    const NodeState& s = state_.at(id);
    if (!s.seen) continue;  // nothing received yet: not stale, just unheard
    const long age = now_step - s.sent_step;
    if (age > cfg_.staleness_limit_steps) {
      ev.stale_nodes.push_back(id);
      continue;
    }
    usable_taus.push_back(s.tau);
    if (s.tau < cfg_.tau_alarm && age <= cfg_.coincidence_window_steps)
      alarmed.push_back({id, s.onset_step.value_or(s.sent_step)});
  }

  if (usable_taus.empty()) {
    ev.blind = true;
    ev.verdicts.push_back({VerdictKind::none, {}, now_step});
    return ev;
  }
  ev.aggregate_tau = aggregate_trust(usable_taus);

  if (alarmed.empty()) {
    ev.verdicts.push_back({VerdictKind::none, {}, now_step});
    return ev;
  }
  if (alarmed.size() == 1) {
    ev.verdicts.push_back({VerdictKind::local, {alarmed[0].node}, now_step});
    return ev;
  }

  // Largest onset cluster with spread <= coincidence window. Onsets are scalar,
  // so the pairwise condition reduces to max - min over a sorted sliding window.
  std::sort(alarmed.begin(), alarmed.end(), [](const Alarmed& a, const Alarmed& b) {
    if (a.onset != b.onset) return a.onset < b.onset;
    return a.node < b.node;
  });
  std::size_t best_begin = 0, best_len = 1;
  for (std::size_t lo = 0, hi = 0; hi < alarmed.size(); ++hi) {
    while (alarmed[hi].onset - alarmed[lo].onset > cfg_.coincidence_window_steps) ++lo;
    if (hi - lo + 1 > best_len) {
      best_len = hi - lo + 1;
      best_begin = lo;
    }
  }

  std::vector<std::string> cluster, leftovers;
  for (std::size_t i = 0; i < alarmed.size(); ++i) {
    if (i >= best_begin && i < best_begin + best_len &&
        best_len >= static_cast<std::size_t>(cfg_.quorum_k))
      cluster.push_back(alarmed[i].node);
    else
      leftovers.push_back(alarmed[i].node);
  }
  std::sort(cluster.begin(), cluster.end());
  std::sort(leftovers.begin(), leftovers.end());
  if (!cluster.empty())
    ev.verdicts.push_back({VerdictKind::coordinated, cluster, now_step});
  for (const auto& n : leftovers)
    ev.verdicts.push_back({VerdictKind::local, {n}, now_step});
  return ev;
}

}  // namespace snitchdt
