#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "snitchdt/ann.hpp"
#include "snitchdt/attack.hpp"
#include "snitchdt/coordination.hpp"
#include "snitchdt/plant.hpp"
#include "snitchdt/twin.hpp"

namespace snitchdt {

enum class Detector { snitch, ann };

const char* to_string(Detector d);

struct SetpointPoint {
  double t_s = 0.0;
  double q = 0.0;
};

// Piecewise-constant operator schedule: value of the last point with t_s <= t.
// Must start at t_s = 0 and be strictly increasing in t_s.
double schedule_value(const std::vector<SetpointPoint>& schedule, double t);

struct NodeConfig {
  std::string id;
  PlantParams plant;
  std::vector<SetpointPoint> schedule;
};

struct CalibrationConfig {
  double duration_s = 0.5;  // attack-free warmup per node feeding calibrate()
};

// Dataset generation + training knobs for the windowed predictor baseline.
struct AnnConfig {
  int n_m = 20;
  TrainConfig train;
  int train_runs = 8;
  double train_duration_s = 0.3;
  int subsample = 4;           // keep every k-th step as a dataset row
  double level_min = 0.0;      // healthy setpoint levels drawn from this range
  double level_max = 0.4;
  double step_t_s = 0.15;      // mid-run setpoint step inside each training run

  void validate() const;  // throws ConfigError
};

struct ScenarioConfig {
  std::string scenario_id;
  std::uint64_t master_seed = 42;
  double duration_s = 1.0;
  double dt = 1e-4;
  std::vector<Detector> detectors{Detector::snitch, Detector::ann};
  std::vector<NodeConfig> nodes;  // defaults to bus1/bus5/bus21/bus26
  AttackSpec attack;
  TwinConfig twin;
  NetworkConfig network;
  ConsensusConfig consensus;
  CalibrationConfig calibration;
  AnnConfig ann;

  void validate() const;  // throws ConfigError naming the offending field
  long total_steps() const;
  bool has_detector(Detector d) const;
};

ScenarioConfig default_scenario_config();

// Strict JSON loading: unknown keys are rejected by name, every invariant
// failure names its field, and all defaults are resolved.
ScenarioConfig load_scenario_config(const std::string& path);
ScenarioConfig parse_scenario_config(const std::string& json_text);

// Canonical echo of the fully resolved config (sorted keys, stable number
// formatting). Reloading the echo yields an identical configuration.
std::string dump_scenario_config(const ScenarioConfig& cfg);

// FNV-1a over the canonical echo, as 16 lowercase hex digits. Stamped into
// every output file next to master_seed.
std::string config_hash(const ScenarioConfig& cfg);

struct VariationRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct SuiteSpec {
  std::vector<AttackKind> attack_types{AttackKind::none, AttackKind::bias,
                                       AttackKind::ramp, AttackKind::delay};
  int scenarios_per_type = 10;
  ScenarioConfig base;
  VariationRange onset_s{0.1, 0.5};
  VariationRange bias_magnitude{0.05, 0.2};  // sign drawn separately
  VariationRange ramp_slope{0.2, 1.0};       // sign drawn separately
  VariationRange delay_s{0.01, 0.04};

  void validate() const;  // throws ConfigError
};

SuiteSpec load_suite_spec(const std::string& path);
SuiteSpec parse_suite_spec(const std::string& json_text,
                           const std::string& base_dir = {});
std::string dump_suite_spec(const SuiteSpec& spec);
std::string suite_hash(const SuiteSpec& spec);

}  // namespace snitchdt
