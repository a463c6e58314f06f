#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "snitchdt/plant.hpp"

namespace snitchdt {

enum class MonitoredChannel { terminal_voltage, reactive_power };

const char* to_string(MonitoredChannel c);

inline constexpr double kSigmaSqFloor = 1e-12;

// Residual-monitoring configuration. epsilon/sigma_sq left unset are filled by
// calibration on an attack-free warmup run.
struct TwinConfig {
  std::optional<double> epsilon;   // detection threshold, pu
  std::optional<double> sigma_sq;  // healthy residual variance, pu^2
  double window_s = 0.05;          // trust window length, s
  MonitoredChannel monitored_channel = MonitoredChannel::reactive_power;
  int sustain_m = 5;               // consecutive detections for a sustained alarm

  void validate(double dt) const;  // throws ConfigError
  std::size_t window_samples(double dt) const;
};

// Rolling buffer of the last N residuals with an incrementally maintained sum of
// squares. The running sum is recomputed from the buffer every 1000 pushes so it
// stays within 1e-9 relative of the brute-force value.
class ResidualWindow {
 public:
  explicit ResidualWindow(std::size_t n_window);

  void push(double r);
  std::size_t size() const { return count_; }
  std::size_t n_window() const { return ring_.size(); }
  double sum_sq() const { return sum_sq_; }
  double recompute_sum_sq() const;  // brute force over buffer contents

 private:
  std::vector<double> ring_;
  std::size_t head_ = 0;
  std::size_t count_ = 0;
  double sum_sq_ = 0.0;
  std::uint64_t pushes_ = 0;
};

// measured - predicted (signed). Throws SimulationError on non-finite input.
double residual(double measured, double predicted);

// |r| > epsilon, strict.
bool detect(double r, double epsilon);

// exp(-(1/n_window) * sum r^2 / sigma_sq). n_window is the configured window
// length in samples; a partially filled window is still normalized by n_window,
// so trust starts high and settles as the window fills. Result in (0, 1].
double trust_score(const ResidualWindow& w, double sigma_sq, std::size_t n_window);

struct Calibration {
  double sigma_sq = 0.0;
  double epsilon = 0.0;
};

// sigma_sq = max(population variance, 1e-12); epsilon = mean|r| + 4*std(r).
// Requires >= 1000 samples from an attack-free run; rejects epsilon <= 0.
Calibration calibrate(const std::vector<double>& healthy_residuals);

// Mirrored plant instance driven only by the clean setpoint schedule and its own
// noise-free outputs. Runs the same stepping code as the physical plant with
// sigma_meas forced to 0, so with zero plant noise and no attack the two
// trajectories are bit-identical.
class DigitalTwin {
 public:
  DigitalTwin(const PlantParams& params, const PlantState& initial, MonitoredChannel ch);

  // Advance one step with the clean setpoint; returns the predicted monitored
  // output. Throws TwinError if the internal model goes non-finite.
  double step(double clean_setpoint);

  double predicted_output() const { return predicted_; }
  const PlantState& model_state() const { return model_; }
  long step_index() const { return model_.step; }

 private:
  PlantParams params_;
  PlantState model_;
  MonitoredChannel channel_;
  double predicted_;
  Rng null_noise_{0};  // drawn into a zero sigma; keeps one plant_step code path
};

}  // namespace snitchdt
