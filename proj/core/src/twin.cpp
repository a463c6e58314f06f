#include "snitchdt/twin.hpp"

#include <algorithm>
#include <cmath>

#include "snitchdt/errors.hpp"

namespace snitchdt {

const char* to_string(MonitoredChannel c) {
  switch (c) {
    case MonitoredChannel::terminal_voltage: return "terminal_voltage";
    case MonitoredChannel::reactive_power: return "reactive_power";
  }
  return "?";
}

void TwinConfig::validate(double dt) const {
  if (epsilon && !(*epsilon > 0.0))
    throw ConfigError("twin.epsilon must be > 0");
  if (sigma_sq && !(*sigma_sq >= kSigmaSqFloor))
    throw ConfigError("twin.sigma_sq must be >= 1e-12");
  if (!(window_s >= dt))
    throw ConfigError("twin.window_s must be >= dt");
  if (sustain_m < 1)
    throw ConfigError("twin.sustain_m must be >= 1");
}

std::size_t TwinConfig::window_samples(double dt) const {
  const auto n = static_cast<std::size_t>(std::llround(window_s / dt));
  return n == 0 ? 1 : n;
}

ResidualWindow::ResidualWindow(std::size_t n_window) : ring_(n_window, 0.0) {
  if (n_window == 0) throw ConfigError("residual window length must be >= 1");
}

void ResidualWindow::push(double r) {
  if (count_ == ring_.size()) {
    const double old = ring_[head_];
    sum_sq_ -= old * old;
    if (sum_sq_ < 0.0) sum_sq_ = 0.0;  // cancellation guard
  } else {
    ++count_;
  }
  ring_[head_] = r;
  sum_sq_ += r * r;
  head_ = (head_ + 1) % ring_.size();
  // Periodic rebuild bounds incremental drift to well under 1e-9 relative.
  if (++pushes_ % 1000 == 0) sum_sq_ = recompute_sum_sq();
}

double ResidualWindow::recompute_sum_sq() const {
  double s = 0.0;
  for (std::size_t i = 0; i < count_; ++i) {
    const double r = ring_[i];
    s += r * r;
  }
  return s;
}

double residual(double measured, double predicted) {
  if (!std::isfinite(measured) || !std::isfinite(predicted))
    throw SimulationError("non-finite value in residual computation");
  return measured - predicted;
}

bool detect(double r, double epsilon) { return std::abs(r) > epsilon; }

double trust_score(const ResidualWindow& w, double sigma_sq, std::size_t n_window) {
  if (!(sigma_sq >= kSigmaSqFloor))
    throw ConfigError("trust_score: sigma_sq must be >= 1e-12");
  if (n_window == 0) throw ConfigError("trust_score: n_window must be >= 1");
  if (w.size() == 0)
    throw ConfigError("trust_score: window is empty; trust undefined before the first sample");
  const double mean_sq = w.sum_sq() / static_cast<double>(n_window);
  const double tau = std::exp(-mean_sq / sigma_sq);
  // exp underflows to 0 near -745; keep the score strictly positive.
  return std::max(tau, 1e-300);
}

Calibration calibrate(const std::vector<double>& healthy_residuals) {
  if (healthy_residuals.size() < 1000)
    throw CalibrationError("calibration needs at least 1000 healthy residual samples, got " +
                           std::to_string(healthy_residuals.size()));
  double mean = 0.0, mean_abs = 0.0;
  for (double r : healthy_residuals) {
    if (!std::isfinite(r)) throw CalibrationError("non-finite residual in calibration data");
    mean += r;
    mean_abs += std::abs(r);
  }
  const auto n = static_cast<double>(healthy_residuals.size());
  mean /= n;
  mean_abs /= n;
  double var = 0.0;
  for (double r : healthy_residuals) {
    const double d = r - mean;
    var += d * d;
  }
  var /= n;
  Calibration c;
  c.sigma_sq = std::max(var, kSigmaSqFloor);
  c.epsilon = mean_abs + 4.0 * std::sqrt(var);
  if (!(c.epsilon > 0.0))
    throw CalibrationError("calibrated epsilon is not positive; residual data is degenerate");
  return c;
}

DigitalTwin::DigitalTwin(const PlantParams& params, const PlantState& initial,
                         MonitoredChannel ch)
    : params_(params), model_(initial), channel_(ch) {
  params_.sigma_meas = 0.0;  // the replica trusts its own model output
  predicted_ = channel_ == MonitoredChannel::terminal_voltage ? model_.v_g : model_.q_g;
}

double DigitalTwin::step(double clean_setpoint) {
  // The replica feeds back its own noise-free outputs, never the (attackable)
  // sensor stream, so a compromised channel cannot steer the reference model.
  ControllerInputs in;
  in.q_setpoint = clean_setpoint;
  in.v_meas = model_.v_g;
  in.q_meas = model_.q_g;
  try {
    plant_step(model_, in, params_, null_noise_);
  } catch (const SimulationError& e) {
    // e.what() already carries the step suffix from the model step.
    throw TwinError(std::string("twin model failed: ") + e.what());
  }
  predicted_ = channel_ == MonitoredChannel::terminal_voltage ? model_.v_g : model_.q_g;
  return predicted_;
}

}  // namespace snitchdt
