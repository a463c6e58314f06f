#pragma once

#include <stdexcept>
#include <string>

namespace snitchdt {

// Invalid configuration or unusable input data. The CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Calibration could not produce a usable threshold (too few samples, degenerate
// residuals). Treated as a configuration-class failure.
struct CalibrationError : ConfigError {
  using ConfigError::ConfigError;
};

// Fatal error while stepping a scenario. The CLI maps this to exit code 2.
struct SimulationError : std::runtime_error {
  long step;
  explicit SimulationError(const std::string& what, long step_index = -1)
      : std::runtime_error(step_index >= 0
                               ? what + " (step " + std::to_string(step_index) + ")"
                               : what),
        step(step_index) {}
};

// A digital twin went non-finite. The owning node is reported as untrusted
// (tau forced to 0) instead of aborting the whole scenario.
struct TwinError : SimulationError {
  using SimulationError::SimulationError;
};

// SGD diverged; carries the offending epoch.
struct TrainingError : std::runtime_error {
  int epoch;
  explicit TrainingError(const std::string& what, int epoch_index = -1)
      : std::runtime_error(epoch_index >= 0
                               ? what + " (epoch " + std::to_string(epoch_index) + ")"
                               : what),
        epoch(epoch_index) {}
};

}  // namespace snitchdt
