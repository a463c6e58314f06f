#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "snitchdt/config.hpp"
#include "snitchdt/errors.hpp"
#include "snitchdt/harness.hpp"

using namespace snitchdt;

namespace {

ScenarioConfig quiet_config(const std::string& extra = "") {
  // Short snitch-only run with a lossless, zero-latency network so the
  // report counters are exactly predictable.
  std::string text = R"({
    "scenario_id": "unit",
    "duration_s": 0.2,
    "detectors": ["snitch"],
    "network": {"report_period_steps": 10, "latency_mean_s": 0.0,
                "latency_jitter_s": 0.0, "drop_prob": 0.0})";
  if (!extra.empty()) text += "," + extra;
  text += "}";
  return parse_scenario_config(text);
}

}  // namespace

TEST_CASE("calibration depends on the seed, not the scenario identity") {
  ScenarioConfig a = quiet_config();
  ScenarioConfig b = quiet_config(R"("attack": {"kind": "bias", "node": "bus5",
      "channel": "q_meas", "t_start_s": 0.1, "magnitude": 0.1})");
  b.scenario_id = "other_name";

  const auto ca = calibrate_nodes(a);
  const auto cb = calibrate_nodes(b);
  REQUIRE(ca.size() == 4);
  REQUIRE(cb.size() == 4);
  for (std::size_t i = 0; i < ca.size(); ++i) {
    CHECK(ca[i].epsilon == cb[i].epsilon);
    CHECK(ca[i].sigma_sq == cb[i].sigma_sq);
    // Noise sigma 1e-3 puts the threshold near 4.8e-3 and the variance near 1e-6.
    CHECK(ca[i].epsilon > 3e-3);
    CHECK(ca[i].epsilon < 7e-3);
    CHECK(ca[i].sigma_sq > 0.7e-6);
    CHECK(ca[i].sigma_sq < 1.4e-6);
  }

  ScenarioConfig c = quiet_config();
  c.master_seed = 43;
  const auto cc = calibrate_nodes(c);
  CHECK(cc[0].epsilon != ca[0].epsilon);

  ScenarioConfig d = quiet_config();
  d.twin.epsilon = 0.01;
  d.twin.sigma_sq = 2e-6;
  const auto cd = calibrate_nodes(d);
  for (const auto& cal : cd) {
    CHECK(cal.epsilon == 0.01);
    CHECK(cal.sigma_sq == 2e-6);
  }
}

TEST_CASE("a healthy run stays quiet end to end") {
  const ScenarioConfig cfg = quiet_config();
  const auto calib = calibrate_nodes(cfg);
  const ScenarioResult res = simulate_scenario(cfg, calib, nullptr);

  CHECK(res.failed_step == -1);
  CHECK(res.failure.empty());
  CHECK(res.trace_dt == cfg.dt);
  REQUIRE(res.nodes.size() == 4);
  const std::size_t len = static_cast<std::size_t>(cfg.total_steps()) + 1;
  REQUIRE(res.verdict_by_step.size() == len);
  CHECK(res.verdict_by_step.front() == "none");
  for (const auto& v : res.verdict_by_step) CHECK(v == "none");
  CHECK(res.eval_steps.size() == 200);  // every 10th step of 2000

  for (const auto& n : res.nodes) {
    REQUIRE(n.v_true.size() == len);
    REQUIRE(n.tau.size() == len);
    CHECK(n.onset_step == -1);
    CHECK(std::none_of(n.truth.begin(), n.truth.end(), [](bool b) { return b; }));
    CHECK(std::none_of(n.local_alarm.begin(), n.local_alarm.end(),
                       [](bool b) { return b; }));
    CHECK(n.tau.back() > 0.15);
    CHECK(n.tau.back() < 0.7);
  }

  // 4 nodes reporting every 10 steps over 2000 steps, nothing dropped.
  CHECK(res.net_sent == 800);
  CHECK(res.net_dropped == 0);

  const ScenarioScore sc = score_scenario(res, Detector::snitch, cfg.twin.sustain_m);
  CHECK_FALSE(sc.attack_present);
  CHECK_FALSE(sc.detected);
  CHECK_FALSE(sc.false_alarm);
}

TEST_CASE("simulation is bit-repeatable per seed") {
  const ScenarioConfig cfg = quiet_config();
  const auto calib = calibrate_nodes(cfg);
  const ScenarioResult a = simulate_scenario(cfg, calib, nullptr);
  const ScenarioResult b = simulate_scenario(cfg, calib, nullptr);
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].v_meas == b.nodes[i].v_meas);
    CHECK(a.nodes[i].tau == b.nodes[i].tau);
  }

  ScenarioConfig other = quiet_config();
  other.master_seed = 1234;
  const ScenarioResult c = simulate_scenario(other, calibrate_nodes(other), nullptr);
  CHECK(a.nodes[0].v_meas != c.nodes[0].v_meas);
}

TEST_CASE("a measurement bias is caught and attributed to its node") {
  ScenarioConfig cfg = parse_scenario_config(R"({
    "scenario_id": "bias_unit",
    "duration_s": 0.3,
    "detectors": ["snitch"],
    "attack": {"kind": "bias", "node": "bus5", "channel": "q_meas",
               "t_start_s": 0.1, "magnitude": 0.1}
  })");
  const auto calib = calibrate_nodes(cfg);
  const ScenarioResult res = simulate_scenario(cfg, calib, nullptr);

  CHECK(res.failed_step == -1);
  long target = -1;
  for (std::size_t i = 0; i < res.nodes.size(); ++i) {
    if (res.nodes[i].id == "bus5") {
      target = static_cast<long>(i);
      CHECK(res.nodes[i].onset_step == 1000);  // t_start / dt
      CHECK_FALSE(res.nodes[i].truth[999]);
      CHECK(res.nodes[i].truth[1000]);
    } else {
      CHECK(res.nodes[i].onset_step == -1);
    }
  }
  REQUIRE(target >= 0);
  CHECK(res.verdict_by_step.back() == "local(bus5)");

  const ScenarioScore sc = score_scenario(res, Detector::snitch, cfg.twin.sustain_m);
  CHECK(sc.attack_present);
  CHECK(sc.onset_step == 1000);
  CHECK(sc.detected);
  CHECK_FALSE(sc.false_alarm);
  REQUIRE(sc.delay_steps.has_value());
  CHECK(*sc.delay_steps >= 0);
  CHECK(*sc.delay_steps <= 100);
  CHECK(sc.censored_delay_steps == *sc.delay_steps);
  REQUIRE(sc.rmse_pu.has_value());
  CHECK(*sc.rmse_pu > 0.0);
}

TEST_CASE("scenario labeling distinguishes detections from false alarms") {
  // Synthetic result: one attacked node (onset 100) and one healthy node,
  // horizon 200, sustain 2.
  ScenarioResult res;
  res.scenario_id = "synthetic";
  res.attack_kind = AttackKind::bias;
  const std::size_t len = 201;
  NodeSeries attacked;
  attacked.id = "a";
  attacked.onset_step = 100;
  attacked.v_true.assign(len, 1.0);
  attacked.q_true.assign(len, 0.25);
  attacked.clean_q_ref.assign(len, 0.2);  // constant 0.05 tracking gap
  attacked.detect_raw.assign(len, false);
  attacked.ann_raw.assign(len, false);
  NodeSeries healthy = attacked;
  healthy.id = "b";
  healthy.onset_step = -1;

  SUBCASE("sustained run after onset is a detection") {
    attacked.detect_raw[105] = attacked.detect_raw[106] = true;
    res.nodes = {attacked, healthy};
    const ScenarioScore sc = score_scenario(res, Detector::snitch, 2);
    CHECK(sc.attack_present);
    CHECK(sc.detected);
    CHECK_FALSE(sc.false_alarm);
    CHECK(sc.onset_step == 100);
    REQUIRE(sc.delay_steps.has_value());
    CHECK(*sc.delay_steps == 5);  // first step of the qualifying window
    // Tracking error averaged from the detection step to the horizon.
    CHECK(*sc.rmse_pu == doctest::Approx(0.05).epsilon(1e-12));
  }

  SUBCASE("sustained run before onset is a false alarm") {
    attacked.detect_raw[90] = attacked.detect_raw[91] = true;
    attacked.detect_raw[105] = attacked.detect_raw[106] = true;
    res.nodes = {attacked, healthy};
    const ScenarioScore sc = score_scenario(res, Detector::snitch, 2);
    CHECK(sc.detected);
    CHECK(sc.false_alarm);
  }

  SUBCASE("any sustained run on a healthy node is a false alarm") {
    healthy.detect_raw[50] = healthy.detect_raw[51] = true;
    res.nodes = {attacked, healthy};
    const ScenarioScore sc = score_scenario(res, Detector::snitch, 2);
    CHECK_FALSE(sc.detected);
    CHECK(sc.false_alarm);  // healthy-node alarm inside an attack scenario
  }

  SUBCASE("a miss is censored at the horizon and scored on the final step") {
    res.nodes = {attacked, healthy};
    const ScenarioScore sc = score_scenario(res, Detector::snitch, 2);
    CHECK(sc.attack_present);
    CHECK_FALSE(sc.detected);
    CHECK_FALSE(sc.delay_steps.has_value());
    CHECK(sc.censored_delay_steps == 100);  // horizon 200 - onset 100
    CHECK(*sc.rmse_pu == doctest::Approx(0.05).epsilon(1e-12));
  }

  SUBCASE("isolated blips below the sustain length never count") {
    attacked.detect_raw[120] = true;
    attacked.detect_raw[140] = true;
    res.nodes = {attacked, healthy};
    const ScenarioScore sc = score_scenario(res, Detector::snitch, 2);
    CHECK_FALSE(sc.detected);
    CHECK_FALSE(sc.false_alarm);
  }
}

TEST_CASE("suite variations are deterministic and well formed") {
  SuiteSpec spec = parse_suite_spec("{}");

  const ScenarioConfig a = make_suite_scenario(spec, AttackKind::bias, 3);
  const ScenarioConfig b = make_suite_scenario(spec, AttackKind::bias, 3);
  CHECK(config_hash(a) == config_hash(b));
  CHECK(a.scenario_id == "bias_03");
  CHECK(a.attack.kind == AttackKind::bias);
  CHECK(a.attack.t_start >= 0.1);
  CHECK(a.attack.t_start <= 0.5);
  CHECK(std::abs(a.attack.magnitude) >= 0.05);
  CHECK(std::abs(a.attack.magnitude) <= 0.2);
  bool known_node = false;
  for (const auto& n : a.nodes) known_node = known_node || n.id == a.attack.node;
  CHECK(known_node);

  const ScenarioConfig c = make_suite_scenario(spec, AttackKind::bias, 4);
  CHECK(c.scenario_id == "bias_04");
  CHECK(config_hash(c) != config_hash(a));

  const ScenarioConfig none = make_suite_scenario(spec, AttackKind::none, 0);
  CHECK(none.attack.kind == AttackKind::none);
  CHECK(none.scenario_id == "none_00");

  const ScenarioConfig dl = make_suite_scenario(spec, AttackKind::delay, 7);
  CHECK(dl.attack.delay_s >= 0.01);
  CHECK(dl.attack.delay_s <= 0.04);

  for (int i = 0; i < 10; ++i) {
    const ScenarioConfig co = make_suite_scenario(spec, AttackKind::coordinated, i);
    REQUIRE(co.attack.components.size() == 2);
    const AttackSpec& c1 = co.attack.components[0];
    const AttackSpec& c2 = co.attack.components[1];
    CHECK(c1.node != c2.node);
    CHECK(c1.kind == AttackKind::bias);
    CHECK(c2.kind == AttackKind::bias);
    CHECK(c2.t_start >= c1.t_start);
    const double stagger_max =
        0.5 * static_cast<double>(co.consensus.coincidence_window_steps) * co.dt;
    CHECK(c2.t_start - c1.t_start <= stagger_max);
    CHECK_NOTHROW(co.validate());
  }
}

TEST_CASE("a mid-run voltage collapse aborts with partial series") {
  // Steep voltage coupling plus a deep setpoint step drives the terminal
  // voltage through zero mid-run. Thresholds are pinned so no calibration
  // simulation runs on this deliberately unstable plant.
  const ScenarioConfig cfg = parse_scenario_config(R"({
    "scenario_id": "collapse",
    "duration_s": 0.2,
    "detectors": ["snitch"],
    "twin": {"epsilon": 0.005, "sigma_sq": 1e-6},
    "setpoint_schedule": [{"t_s": 0.0, "q": 0.0}, {"t_s": 0.05, "q": -0.45}],
    "nodes": [{"id": "a", "plant": {"k_q": 3.0, "k_droop": 0.0}}]
  })");
  const auto calib = calibrate_nodes(cfg);
  const ScenarioResult res = simulate_scenario(cfg, calib, nullptr);

  CHECK(res.failed_step > 500);  // healthy until the setpoint step at 0.05 s
  CHECK(res.failed_step < cfg.total_steps());
  CHECK_FALSE(res.failure.empty());
  REQUIRE(res.nodes.size() == 1);
  const std::size_t len = res.nodes[0].v_true.size();
  CHECK(len > 500);
  CHECK(len < static_cast<std::size_t>(cfg.total_steps()) + 1);

  // The scenario runner still flushes the partial trace, then reports failure.
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "snitchdt_collapse_out";
  fs::remove_all(dir);
  CHECK_THROWS_AS((void)run_scenario(cfg, dir.string(), OutputFormat::csv),
                  SimulationError);
  CHECK(fs::exists(dir / "trace.csv"));
  CHECK(fs::file_size(dir / "trace.csv") > 100);
  fs::remove_all(dir);
}

TEST_CASE("baseline training is deterministic per master seed") {
  ScenarioConfig cfg = parse_scenario_config(R"({
    "scenario_id": "ann_unit",
    "duration_s": 0.1,
    "ann": {"train_runs": 3, "epochs": 15}
  })");
  const AnnModel a = train_baseline(cfg);
  const AnnModel b = train_baseline(cfg);
  CHECK(a.params.w1 == b.params.w1);
  CHECK(a.params.b2 == b.params.b2);
  CHECK(a.epsilon_ann == b.epsilon_ann);
  CHECK(a.epsilon_ann > 0.0);
  CHECK(a.n_m == cfg.ann.n_m);

  cfg.master_seed = 77;
  const AnnModel c = train_baseline(cfg);
  CHECK(a.params.w1 != c.params.w1);
}
