#include "snitchdt/plant.hpp"

#include <cmath>
#include <stdexcept>

namespace snitchdt {

void PlantParams::validate() const {
  if (!std::isfinite(v_nom) || v_nom <= 0.0) throw ConfigError("v_nom must be > 0");
  if (!std::isfinite(k_q)) throw ConfigError("k_q must be finite");
  if (!std::isfinite(t_c) || t_c <= 0.0) throw ConfigError("t_c must be > 0");
  if (!std::isfinite(kp) || !std::isfinite(ki)) throw ConfigError("kp/ki must be finite");
  if (!std::isfinite(k_droop)) throw ConfigError("k_droop must be finite");
  if (!std::isfinite(q_min) || !std::isfinite(q_max) || q_min >= q_max)
    throw ConfigError("q_min must be < q_max");
  if (!std::isfinite(p_fixed)) throw ConfigError("p_fixed must be finite");
  if (!std::isfinite(sigma_meas) || sigma_meas < 0.0)
    throw ConfigError("sigma_meas must be >= 0");
  if (!std::isfinite(dt) || dt <= 0.0) throw ConfigError("dt must be > 0");
}

double terminal_voltage(double q_g, const PlantParams& p) {
  return p.v_nom + p.k_q * q_g;
}

double apparent_current(double p, double q, double v) {
  if (v <= 0.0) throw std::domain_error("apparent_current: v must be > 0");
  return std::sqrt(p * p + q * q) / v;
}

double droop_reference(double v_meas, double q_base, const PlantParams& p) {
  double q_ref = q_base + p.k_droop * (p.v_nom - v_meas);
  if (q_ref > p.q_max) q_ref = p.q_max;
  if (q_ref < p.q_min) q_ref = p.q_min;
  return q_ref;
}

PlantState make_state(double q_g, const PlantParams& p) {
  PlantState s;
  s.q_g = q_g;
  s.v_g = terminal_voltage(q_g, p);
  s.i_g = apparent_current(p.p_fixed, q_g, s.v_g);
  return s;
}

PlantState equilibrium_state(double q_setpoint, const PlantParams& p) {
  double q = q_setpoint / (1.0 + p.k_droop * p.k_q);
  if (q > p.q_max) q = p.q_max;
  if (q < p.q_min) q = p.q_min;
  return make_state(q, p);
}

NodeTelemetry plant_step(PlantState& s, const ControllerInputs& in,
                         const PlantParams& p, Rng& noise) {
  if (!std::isfinite(s.q_g) || !std::isfinite(s.pi_integrator) || !std::isfinite(s.v_g))
    throw SimulationError("non-finite plant state", s.step);
  if (!std::isfinite(in.q_setpoint) || !std::isfinite(in.v_meas) || !std::isfinite(in.q_meas))
    throw SimulationError("non-finite controller input", s.step);

  const double q_ref = droop_reference(in.v_meas, in.q_setpoint, p);
  const double err = q_ref - in.q_meas;
  const double integ_next = s.pi_integrator + p.ki * err * p.dt;
  const double q_cmd = q_ref + p.kp * err + integ_next;

  const double q_raw = s.q_g + p.dt * (q_cmd - s.q_g) / p.t_c;
  if (q_raw > p.q_max) {
    s.q_g = p.q_max;  // clamped; integrator keeps its previous value
  } else if (q_raw < p.q_min) {
    s.q_g = p.q_min;
  } else {
    s.q_g = q_raw;
    s.pi_integrator = integ_next;
  }

  s.v_g = terminal_voltage(s.q_g, p);
  // A collapsed voltage is as fatal as a non-finite state; fail with the step
  // index instead of leaking the bare domain error from apparent_current.
  if (s.v_g <= 0.0) throw SimulationError("terminal voltage collapsed", s.step);
  s.i_g = apparent_current(p.p_fixed, s.q_g, s.v_g);
  s.step += 1;

  NodeTelemetry t;
  t.step = s.step;
  t.v_g_true = s.v_g;
  t.q_g_true = s.q_g;
  // fixed draw order v, i, q keeps the stream layout stable
  t.v_g_meas = s.v_g + p.sigma_meas * noise.gaussian();
  t.i_g_meas = s.i_g + p.sigma_meas * noise.gaussian();
  t.q_g_meas = s.q_g + p.sigma_meas * noise.gaussian();
  t.q_setpoint_received = in.q_setpoint;
  return t;
}

}  // namespace snitchdt
