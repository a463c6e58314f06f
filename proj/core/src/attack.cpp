#include "snitchdt/attack.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace snitchdt {

const char* to_string(AttackKind k) {
  switch (k) {
    case AttackKind::none: return "none";
    case AttackKind::bias: return "bias";
    case AttackKind::ramp: return "ramp";
    case AttackKind::delay: return "delay";
    case AttackKind::coordinated: return "coordinated";
  }
  return "?";
}

const char* to_string(Channel c) {
  switch (c) {
    case Channel::q_setpoint: return "q_setpoint";
    case Channel::v_meas: return "v_meas";
    case Channel::q_meas: return "q_meas";
    case Channel::i_meas: return "i_meas";
  }
  return "?";
}

namespace {

bool leaf_hits_channel(const AttackSpec& s, Channel c) {
  if (s.channel) return *s.channel == c;
  switch (s.kind) {
    case AttackKind::bias:
    case AttackKind::ramp:
      return c == Channel::q_setpoint;
    case AttackKind::delay:
      return c == Channel::v_meas || c == Channel::q_meas;
    default:
      return false;
  }
}

}  // namespace

void AttackSpec::validate() const {
  if (!std::isfinite(t_start) || t_start < 0.0)
    throw ConfigError("attack t_start must be >= 0");
  switch (kind) {
    case AttackKind::none:
      if (!components.empty()) throw ConfigError("attack kind 'none' takes no components");
      return;
    case AttackKind::bias:
      if (node.empty()) throw ConfigError("bias attack requires a node");
      if (magnitude == 0.0 || !std::isfinite(magnitude))
        throw ConfigError("bias attack magnitude must be nonzero");
      break;
    case AttackKind::ramp:
      if (node.empty()) throw ConfigError("ramp attack requires a node");
      if (slope == 0.0 || !std::isfinite(slope))
        throw ConfigError("ramp attack slope must be nonzero");
      break;
    case AttackKind::delay:
      if (node.empty()) throw ConfigError("delay attack requires a node");
      if (!std::isfinite(delay_s) || delay_s < 0.0)
        throw ConfigError("delay attack delay_s must be >= 0");
      break;
    case AttackKind::coordinated: {
      if (components.size() < 2)
        throw ConfigError("coordinated attack requires >= 2 components");
      std::set<std::string> nodes;
      for (const AttackSpec& c : components) {
        if (c.kind == AttackKind::coordinated)
          throw ConfigError("coordinated attack components must not nest");
        if (c.kind == AttackKind::none)
          throw ConfigError("coordinated attack components must not be 'none'");
        c.validate();
        nodes.insert(c.node);
      }
      if (nodes.size() < 2)
        throw ConfigError("coordinated attack must target >= 2 distinct nodes");
      return;
    }
  }
  if (!components.empty())
    throw ConfigError("only coordinated attacks take components");
}

bool AttackSpec::targets(const std::string& node_id, Channel c) const {
  if (kind == AttackKind::none) return false;
  if (kind == AttackKind::coordinated) {
    return std::any_of(components.begin(), components.end(),
                       [&](const AttackSpec& s) { return s.targets(node_id, c); });
  }
  return node == node_id && leaf_hits_channel(*this, c);
}

double AttackSpec::max_delay_s() const {
  if (kind == AttackKind::delay) return delay_s;
  double m = 0.0;
  for (const AttackSpec& c : components) m = std::max(m, c.max_delay_s());
  return m;
}

std::vector<std::string> AttackSpec::target_nodes() const {
  std::set<std::string> out;
  if (kind == AttackKind::coordinated) {
    for (const AttackSpec& c : components)
      for (const std::string& n : c.target_nodes()) out.insert(n);
  } else if (kind != AttackKind::none) {
    out.insert(node);
  }
  return {out.begin(), out.end()};
}

ChannelHistory::ChannelHistory(std::size_t capacity, double dt)
    : ring_(capacity), dt_(dt) {
  if (capacity == 0) throw ConfigError("channel history capacity must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("channel history dt must be > 0");
}

void ChannelHistory::record(double clean) {
  ring_[head_] = clean;
  head_ = (head_ + 1) % ring_.size();
  if (count_ < ring_.size()) ++count_;
}

double ChannelHistory::lookup(std::size_t lag) const {
  if (count_ == 0) throw SimulationError("channel history lookup before any record");
  const std::size_t eff = std::min(lag, count_ - 1);
  const std::size_t idx = (head_ + ring_.size() - 1 - eff) % ring_.size();
  return ring_[idx];
}

std::size_t delay_lag_steps(double delay_s, double dt) {
  return static_cast<std::size_t>(std::llround(delay_s / dt));
}

double apply_attack(const AttackSpec& spec, const std::string& node_id, Channel channel,
                    double clean, const ChannelHistory& history, double t) {
  switch (spec.kind) {
    case AttackKind::none:
      return clean;
    case AttackKind::coordinated: {
      double out = clean;
      for (const AttackSpec& c : spec.components)
        out = apply_attack(c, node_id, channel, out, history, t);
      return out;
    }
    default:
      break;
  }
  if (spec.node != node_id || !leaf_hits_channel(spec, channel) || t < spec.t_start)
    return clean;
  switch (spec.kind) {
    case AttackKind::bias:
      return clean + spec.magnitude;
    case AttackKind::ramp:
      return clean + spec.slope * (t - spec.t_start);
    case AttackKind::delay:
      return history.lookup(delay_lag_steps(spec.delay_s, history.dt()));
    default:
      return clean;
  }
}

bool ground_truth(const AttackSpec& spec, const std::string& node_id, double t) {
  switch (spec.kind) {
    case AttackKind::none:
      return false;
    case AttackKind::coordinated:
      return std::any_of(spec.components.begin(), spec.components.end(),
                         [&](const AttackSpec& c) { return ground_truth(c, node_id, t); });
    default:
      return spec.node == node_id && t >= spec.t_start;
  }
}

}  // namespace snitchdt
