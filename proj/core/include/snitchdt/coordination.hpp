#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "snitchdt/rng.hpp"

namespace snitchdt {

struct TrustReport {
  std::string node;
  long sent_step = 0;
  double tau = 1.0;
  bool local_alarm = false;
};

// Full-mesh transport parameters. Delivery time = send step + latency rounded
// to steps, never before the send step; payloads arrive bit-exact.
struct NetworkConfig {
  int report_period_steps = 10;
  double latency_mean_s = 0.002;
  double latency_jitter_s = 0.0005;
  double drop_prob = 0.01;

  void validate() const;  // throws ConfigError
};

struct ConsensusConfig {
  double tau_alarm = 0.2;
  int quorum_k = 2;
  long coincidence_window_steps = 1000;
  long staleness_limit_steps = 500;

  void validate() const;  // throws ConfigError
};

enum class VerdictKind { none, local, coordinated };

const char* to_string(VerdictKind k);

struct SystemVerdict {
  VerdictKind kind = VerdictKind::none;
  std::vector<std::string> implicated;  // sorted; empty for none, 1 for local
  long decided_step = 0;
};

// One consensus evaluation. Multiple simultaneous verdicts are possible (several
// sub-quorum locals, or a coordinated cluster plus an unrelated local).
struct Evaluation {
  std::vector<SystemVerdict> verdicts;  // never empty; [0] is the headline verdict
  std::optional<double> aggregate_tau;  // geometric mean over usable nodes
  bool blind = false;                   // no usable (fresh) report from any node
  std::vector<std::string> stale_nodes; // excluded for exceeding the staleness limit
};

// Geometric mean with every input floored at 1e-12. Inputs are sorted before
// the log-sum so the result is exactly permutation invariant. Throws
// ConfigError on empty input.
double aggregate_trust(std::vector<double> taus);

// "none" / "local(bus5)" / "coordinated(bus1+bus5)", multiple joined with '|'.
std::string format_verdicts(const std::vector<SystemVerdict>& verdicts);

// Lossy, latency-simulating broadcast bus. Every send draws one drop variate
// and one latency variate in that order, whether or not the message survives,
// so the random stream layout is independent of drop outcomes.
class SimulatedNetwork {
 public:
  SimulatedNetwork(const NetworkConfig& cfg, double dt, std::uint64_t seed);

  void send(const TrustReport& report, long now_step);

  // Messages due at exactly now_step, in (delivery_step, sender, sequence)
  // order. The sequence tiebreak keeps same-step same-sender order FIFO.
  std::vector<TrustReport> poll(long now_step);

  long sent_count() const { return sent_; }
  long dropped_count() const { return dropped_; }

 private:
  NetworkConfig cfg_;
  double dt_;
  Rng rng_;
  std::uint64_t next_seq_ = 0;
  std::map<std::tuple<long, std::string, std::uint64_t>, TrustReport> queue_;
  long sent_ = 0;
  long dropped_ = 0;
};

// Logically centralized consensus state: latest fresh report per node, alarm
// episode onsets, and the classification rule. Every node evaluating the same
// delivered set would reach the same verdicts.
class ConsensusTracker {
 public:
  ConsensusTracker(const ConsensusConfig& cfg, std::vector<std::string> node_ids);

  // Record a delivered report. Reports arriving out of order are reconciled by
  // sent_step: an older report never overwrites a newer one.
  void deliver(const TrustReport& report);

  // Classify the current state. A = nodes with a fresh (within staleness and
  // coincidence limits) report whose tau < tau_alarm. |A| = 0 -> none;
  // |A| = 1 -> local; otherwise the largest subset of A whose alarm onsets
  // span <= coincidence_window_steps forms a coordinated verdict when it
  // reaches quorum_k, with leftover nodes reported as locals; below quorum,
  // every member of A is a separate local verdict.
  Evaluation evaluate(long now_step) const;

 private:
  struct NodeState {
    bool seen = false;
    long sent_step = -1;
    double tau = 1.0;
    bool local_alarm = false;
    std::optional<long> onset_step;  // sent_step of the first sub-threshold report
  };

  ConsensusConfig cfg_;
  std::vector<std::string> ids_;             // sorted
  std::map<std::string, NodeState> state_;
};

}  // namespace snitchdt
