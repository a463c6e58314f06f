#pragma once

#include "snitchdt/errors.hpp"
#include "snitchdt/rng.hpp"

namespace snitchdt {

// Reduced-order model of one grid-side converter's reactive power loop:
// static Q-V coupling, first-order converter lag, PI trim around a droop
// reference. The same class backs both the physical plant and the twin replica.
struct PlantParams {
  double v_nom = 1.0;       // pu
  double k_q = 0.05;        // pu V per pu Q
  double t_c = 0.02;        // converter lag time constant, s
  double kp = 0.5;
  double ki = 20.0;         // 1/s
  double k_droop = 2.0;     // pu Q per pu V
  double q_min = -0.5;      // pu
  double q_max = 0.5;       // pu
  double p_fixed = 0.8;     // pu
  double sigma_meas = 1e-3; // pu
  double dt = 1e-4;         // s

  void validate() const;    // throws ConfigError naming the offending field
};

struct PlantState {
  double q_g = 0.0;          // delivered reactive power, pu
  double pi_integrator = 0.0;
  double v_g = 0.0;          // terminal voltage, pu
  double i_g = 0.0;          // apparent current magnitude, pu
  long step = 0;
};

// Channel values the controller consumes this step, after any attack.
struct ControllerInputs {
  double q_setpoint = 0.0;
  double v_meas = 0.0;
  double q_meas = 0.0;
};

// One step's record. plant_step fills the measured fields with fresh sensor
// output (truth + noise); the harness overwrites them with the attacked values
// before anything downstream consumes them. Ground-truth fields are never touched
// by the attack path.
struct NodeTelemetry {
  long step = 0;
  double v_g_meas = 0.0;
  double i_g_meas = 0.0;
  double q_g_meas = 0.0;
  double q_setpoint_received = 0.0;
  double v_g_true = 0.0;
  double q_g_true = 0.0;
};

// v = v_nom + k_q * q_g
double terminal_voltage(double q_g, const PlantParams& p);

// sqrt(p^2 + q^2) / v; throws std::domain_error when v <= 0
double apparent_current(double p, double q, double v);

// clamp(q_base + k_droop * (v_nom - v_meas), q_min, q_max)
double droop_reference(double v_meas, double q_base, const PlantParams& p);

// State with the given q_g, derived v_g/i_g, zero integrator.
PlantState make_state(double q_g, const PlantParams& p);

// Closed-loop fixed point for a constant setpoint: q* = clamp(s / (1 + k_droop*k_q)).
PlantState equilibrium_state(double q_setpoint, const PlantParams& p);

// One forward-Euler control step. The PI trims around the droop reference
// (reference feedforward + proportional + integral on the tracking error); the
// integrator freezes on any step whose lag update would leave [q_min, q_max]
// (anti-windup). v_g and i_g are recomputed from the new q_g, then measured.
// Throws SimulationError on non-finite state or inputs.
NodeTelemetry plant_step(PlantState& s, const ControllerInputs& in,
                         const PlantParams& p, Rng& noise);

}  // namespace snitchdt
