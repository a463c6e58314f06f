#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "snitchdt/errors.hpp"

namespace snitchdt {

enum class AttackKind { none, bias, ramp, delay, coordinated };
enum class Channel { q_setpoint, v_meas, q_meas, i_meas };

const char* to_string(AttackKind k);
const char* to_string(Channel c);

// Declarative description of one channel manipulation. `channel` may be left
// unset, in which case the kind's default applies: bias/ramp hit q_setpoint,
// delay hits both feedback channels (v_meas and q_meas). Coordinated specs hold
// only child components, which apply in declaration order.
struct AttackSpec {
  AttackKind kind = AttackKind::none;
  std::string node;                  // target node id; empty for none/coordinated
  std::optional<Channel> channel;
  double t_start = 0.0;              // s
  double magnitude = 0.0;            // pu, bias only; must be nonzero
  double slope = 0.0;                // pu/s, ramp only; must be nonzero
  double delay_s = 0.0;              // s, delay only
  std::vector<AttackSpec> components;

  void validate() const;  // throws ConfigError
  // Does this spec (or any component) manipulate the given channel of the node?
  bool targets(const std::string& node_id, Channel c) const;
  double max_delay_s() const;
  // Node ids attacked by any component, sorted, deduplicated.
  std::vector<std::string> target_nodes() const;
};

// Ring buffer of past clean channel values; backs the delay attack.
// lookup(0) is the newest recorded value; lags beyond the recorded history
// return the oldest recorded value.
class ChannelHistory {
 public:
  ChannelHistory(std::size_t capacity, double dt);

  void record(double clean);
  double lookup(std::size_t lag) const;
  std::size_t size() const { return count_; }
  std::size_t capacity() const { return ring_.size(); }
  double dt() const { return dt_; }

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  double dt_;
};

std::size_t delay_lag_steps(double delay_s, double dt);

// Returns the channel value as seen downstream of the attack at time t.
// Mismatched (node, channel) or t < t_start returns `clean` bit-exactly.
double apply_attack(const AttackSpec& spec, const std::string& node_id, Channel channel,
                    double clean, const ChannelHistory& history, double t);

// True iff some component targeting this node is active at t. Channel-agnostic.
bool ground_truth(const AttackSpec& spec, const std::string& node_id, double t);

}  // namespace snitchdt
