#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snitchdt/ann.hpp"
#include "snitchdt/config.hpp"
#include "snitchdt/coordination.hpp"
#include "snitchdt/metrics.hpp"
#include "snitchdt/twin.hpp"

namespace snitchdt {

// Per-node time series over one scenario, row k = step k (k = 0 is the initial
// sensor snapshot). All "meas" values are post-attack; "true"/clean values never
// pass through the attack path.
struct NodeSeries {
  std::string id;
  std::vector<double> v_true, v_meas, q_true, q_meas, s_recv;
  std::vector<double> twin_pred;    // monitored-channel prediction
  std::vector<double> clean_q_ref;  // twin model q_g: the attack-free reference
  std::vector<double> residual, tau, ann_dev;
  std::vector<bool> detect_raw;     // |r| > epsilon, per step
  std::vector<bool> local_alarm;    // sustain_m consecutive detections
  std::vector<bool> ann_raw;        // ann deviation threshold exceeded
  std::vector<bool> truth;          // attack active on this node
  Calibration calib;                // epsilon / sigma_sq actually used
  long onset_step = -1;             // first step with truth = true; -1 if never
};

struct DetectorTiming {
  double snitch_s = 0.0;  // residual + window + trust update loop
  double ann_s = 0.0;     // feature + forward + threshold loop
};

struct ScenarioResult {
  std::string scenario_id;
  AttackKind attack_kind = AttackKind::none;
  double trace_dt = 0.0;  // step size, for reconstructing trace timestamps
  std::vector<NodeSeries> nodes;
  std::vector<std::string> verdict_by_step;  // formatted, one per step
  std::vector<long> eval_steps;
  std::vector<Evaluation> evals;
  DetectorTiming timing;
  long net_sent = 0;
  long net_dropped = 0;
  long failed_step = -1;  // >= 0: aborted there, series are partial
  std::string failure;
};

// One detector's verdict on one scenario, per the scenario-level labeling rule:
// an attack scenario counts as detected only via a sustained run starting at or
// after onset; sustained runs starting earlier (or any run in a healthy
// scenario) are false alarms.
struct ScenarioScore {
  std::string scenario_id;
  AttackKind kind = AttackKind::none;
  bool attack_present = false;
  bool detected = false;
  bool false_alarm = false;
  long onset_step = -1;
  std::optional<long> delay_steps;
  long censored_delay_steps = 0;  // delay, or horizon - onset when undetected
  std::optional<double> rmse_pu;  // post-detection tracking error, attack runs only
};

ScenarioScore score_scenario(const ScenarioResult& result, Detector det, int sustain_m);

// Attack-free warmup per node feeding the residual calibration rule. Uses the
// dedicated calibration noise stream, so results are identical for every
// scenario sharing a master seed.
std::vector<Calibration> calibrate_nodes(const ScenarioConfig& cfg);

// Build the healthy-operation dataset, train the predictor, and calibrate its
// deviation threshold on two held-out runs. Deterministic per master seed.
AnnModel train_baseline(const ScenarioConfig& cfg);

// Lockstep plant/twin/consensus loop. `ann` may be null (detector disabled).
// Fatal plant errors do not throw: the result carries failed_step/failure and
// whatever series were produced, so callers can flush partial traces.
ScenarioResult simulate_scenario(const ScenarioConfig& cfg,
                                 const std::vector<Calibration>& calib,
                                 const AnnModel* ann);

// Scenario index -> concrete variation of the suite's base config, drawn from
// the dedicated variation stream (onset, parameters, sign, target node).
ScenarioConfig make_suite_scenario(const SuiteSpec& spec, AttackKind kind, int index);

enum class OutputFormat { csv, json, both };

struct RunArtifacts {
  std::string out_dir;
  std::string trace_csv;
  std::string metrics_json;
  std::string metrics_csv;
  std::string config_echo;
  std::string calibration_json;
  std::string ann_model_json;
  std::string timing_json;
  std::vector<std::string> roc_csvs;
  std::string roc_summary_json;
  std::vector<std::string> suite_trace_csvs;
  int failed_scenarios = 0;
};

// Subcommand entry points. All outputs except timing.json are byte-determined
// by (config, master_seed); timing.json carries the wall-clock sidecar.
RunArtifacts run_calibrate(const ScenarioConfig& cfg, const std::string& out_dir);
RunArtifacts run_scenario(const ScenarioConfig& cfg, const std::string& out_dir,
                          OutputFormat format = OutputFormat::both);
RunArtifacts run_suite(const SuiteSpec& spec, const std::string& out_dir,
                       OutputFormat format = OutputFormat::both,
                       bool write_metrics = true, bool write_roc = true,
                       bool write_traces = true);

}  // namespace snitchdt
