#include <string>

#include "doctest.h"
#include "snitchdt/config.hpp"
#include "snitchdt/errors.hpp"

using namespace snitchdt;
using doctest::Contains;

TEST_CASE("a minimal document resolves to the documented defaults") {
  const ScenarioConfig cfg = parse_scenario_config(R"({"scenario_id": "demo"})");
  CHECK(cfg.scenario_id == "demo");
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.duration_s == 1.0);
  CHECK(cfg.dt == 1e-4);
  CHECK(cfg.total_steps() == 10000);
  REQUIRE(cfg.nodes.size() == 4);
  CHECK(cfg.nodes[0].id == "bus1");
  CHECK(cfg.nodes[1].id == "bus5");
  CHECK(cfg.nodes[2].id == "bus21");
  CHECK(cfg.nodes[3].id == "bus26");
  REQUIRE(cfg.detectors.size() == 2);
  CHECK(cfg.has_detector(Detector::snitch));
  CHECK(cfg.has_detector(Detector::ann));
  CHECK(cfg.attack.kind == AttackKind::none);
  for (const auto& n : cfg.nodes) {
    CHECK(n.plant.dt == cfg.dt);
    CHECK_FALSE(n.schedule.empty());
  }
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("scenario_id is the only required key") {
  CHECK_THROWS_WITH_AS((void)parse_scenario_config("{}"),
                       Contains("scenario_id is required"), ConfigError);
}

TEST_CASE("unknown keys are rejected by name and context") {
  CHECK_THROWS_WITH_AS(
      (void)parse_scenario_config(R"({"scenario_id": "x", "durationS": 2.0})"),
      Contains("unknown key \"durationS\""), ConfigError);
  CHECK_THROWS_WITH_AS(
      (void)parse_scenario_config(
          R"({"scenario_id": "x", "twin": {"window": 1}})"),
      Contains("unknown key \"window\""), ConfigError);
}

TEST_CASE("per-node plant dt is owned by the top level") {
  const std::string text = R"({
    "scenario_id": "x",
    "nodes": [{"id": "a", "plant": {"dt": 1e-4}}]
  })";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(text),
                       Contains("dt is set by the top-level dt"), ConfigError);
}

TEST_CASE("reactive limit ordering names the offending field") {
  const std::string text = R"({
    "scenario_id": "x",
    "nodes": [{"id": "a", "plant": {"q_min": 0.5, "q_max": -0.5}}]
  })";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(text), Contains("q_min"),
                       ConfigError);
}

TEST_CASE("each attack kind insists on its own parameters") {
  const char* missing_magnitude = R"({
    "scenario_id": "x",
    "attack": {"kind": "bias", "node": "bus5", "channel": "q_meas", "t_start_s": 0.1}
  })";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(missing_magnitude),
                       Contains("magnitude is required for kind bias"), ConfigError);

  const char* missing_slope = R"({
    "scenario_id": "x",
    "attack": {"kind": "ramp", "node": "bus5", "channel": "q_meas", "t_start_s": 0.1}
  })";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(missing_slope),
                       Contains("slope is required for kind ramp"), ConfigError);

  const char* missing_delay = R"({
    "scenario_id": "x",
    "attack": {"kind": "delay", "node": "bus5", "t_start_s": 0.1}
  })";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(missing_delay),
                       Contains("delay_s is required for kind delay"), ConfigError);

  // A bias attack does not take a slope; strictness is per kind.
  const char* extra_key = R"({
    "scenario_id": "x",
    "attack": {"kind": "bias", "node": "bus5", "channel": "q_meas",
               "t_start_s": 0.1, "magnitude": 0.1, "slope": 0.5}
  })";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(extra_key),
                       Contains("unknown key \"slope\""), ConfigError);
}

TEST_CASE("a full bias attack parses into the expected spec") {
  const ScenarioConfig cfg = parse_scenario_config(R"({
    "scenario_id": "x",
    "attack": {"kind": "bias", "node": "bus5", "channel": "q_meas",
               "t_start_s": 0.1, "magnitude": 0.1}
  })");
  CHECK(cfg.attack.kind == AttackKind::bias);
  CHECK(cfg.attack.node == "bus5");
  CHECK(cfg.attack.channel == Channel::q_meas);
  CHECK(cfg.attack.t_start == 0.1);
  CHECK(cfg.attack.magnitude == 0.1);
}

TEST_CASE("attacks must target a configured node") {
  const char* text = R"({
    "scenario_id": "x",
    "attack": {"kind": "bias", "node": "bus99", "channel": "q_meas",
               "t_start_s": 0.1, "magnitude": 0.1}
  })";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(text),
                       Contains("unknown node \"bus99\""), ConfigError);
}

TEST_CASE("detector lists are canonical sets") {
  const ScenarioConfig cfg = parse_scenario_config(
      R"({"scenario_id": "x", "detectors": ["ann", "snitch"]})");
  REQUIRE(cfg.detectors.size() == 2);
  CHECK(cfg.detectors[0] == Detector::snitch);
  CHECK(cfg.detectors[1] == Detector::ann);

  CHECK_THROWS_WITH_AS((void)parse_scenario_config(
                           R"({"scenario_id": "x", "detectors": ["snitch", "snitch"]})"),
                       Contains("duplicate"), ConfigError);
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(
                           R"({"scenario_id": "x", "detectors": ["svm"]})"),
                       Contains("unknown detector \"svm\""), ConfigError);
  CHECK_THROWS_WITH_AS(
      (void)parse_scenario_config(R"({"scenario_id": "x", "detectors": []})"),
      Contains("non-empty"), ConfigError);
}

TEST_CASE("the horizon must be a whole number of steps") {
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(
                           R"({"scenario_id": "x", "duration_s": 1.00005})"),
                       Contains("integer multiple of dt"), ConfigError);
  const ScenarioConfig ok =
      parse_scenario_config(R"({"scenario_id": "x", "duration_s": 0.25})");
  CHECK(ok.total_steps() == 2500);
}

TEST_CASE("the schedule is a right-open step function") {
  const std::vector<SetpointPoint> sch{{0.0, 0.1}, {0.3, 0.4}, {0.7, -0.2}};
  CHECK(schedule_value(sch, 0.0) == 0.1);
  CHECK(schedule_value(sch, 0.2999) == 0.1);
  CHECK(schedule_value(sch, 0.3) == 0.4);  // inclusive at the breakpoint
  CHECK(schedule_value(sch, 0.5) == 0.4);
  CHECK(schedule_value(sch, 0.7) == -0.2);
  CHECK(schedule_value(sch, 99.0) == -0.2);
  CHECK_THROWS_AS((void)schedule_value({}, 0.0), ConfigError);

  CHECK_THROWS_WITH_AS(
      (void)parse_scenario_config(
          R"({"scenario_id": "x", "setpoint_schedule": [{"t_s": 0.1, "q": 0.2}]})"),
      Contains("start at t_s = 0"), ConfigError);
  CHECK_THROWS_WITH_AS(
      (void)parse_scenario_config(
          R"({"scenario_id": "x",
              "setpoint_schedule": [{"t_s": 0.0, "q": 0.2}, {"t_s": 0.0, "q": 0.3}]})"),
      Contains("strictly increasing"), ConfigError);
}

TEST_CASE("dump then parse is a fixed point") {
  const ScenarioConfig cfg = parse_scenario_config(R"({
    "scenario_id": "fixed_point",
    "master_seed": 7,
    "duration_s": 0.5,
    "detectors": ["snitch"],
    "attack": {"kind": "ramp", "node": "bus21", "channel": "v_meas",
               "t_start_s": 0.2, "slope": 0.4},
    "network": {"drop_prob": 0.05},
    "twin": {"sustain_m": 3}
  })");
  const std::string once = dump_scenario_config(cfg);
  const ScenarioConfig back = parse_scenario_config(once);
  CHECK(dump_scenario_config(back) == once);
  CHECK(config_hash(back) == config_hash(cfg));
  CHECK(back.master_seed == 7);
  CHECK(back.attack.slope == 0.4);
  CHECK(back.network.drop_prob == 0.05);
  CHECK(back.twin.sustain_m == 3);
}

TEST_CASE("the hash tracks content, not formatting") {
  const ScenarioConfig a = parse_scenario_config(R"({"scenario_id": "h"})");
  const ScenarioConfig b =
      parse_scenario_config("{\n  \"scenario_id\":   \"h\"\n}");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);

  const ScenarioConfig c =
      parse_scenario_config(R"({"scenario_id": "h", "master_seed": 43})");
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("echo wrappers are accepted and integrity-checked") {
  const ScenarioConfig cfg =
      parse_scenario_config(R"({"scenario_id": "wrapped", "master_seed": 9})");
  const std::string body = dump_scenario_config(cfg);
  const std::string hash = config_hash(cfg);

  const std::string good = "{\"config\": " + body +
                           ", \"config_hash\": \"" + hash +
                           "\", \"master_seed\": 9}";
  const ScenarioConfig back = parse_scenario_config(good);
  CHECK(config_hash(back) == hash);
  CHECK(back.scenario_id == "wrapped");

  const std::string tampered = "{\"config\": " + body +
                               ", \"config_hash\": \"0000000000000000\"}";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(tampered),
                       Contains("drop the config_hash field"), ConfigError);

  const std::string wrong_seed =
      "{\"config\": " + body + ", \"master_seed\": 10}";
  CHECK_THROWS_WITH_AS((void)parse_scenario_config(wrong_seed),
                       Contains("wrapper master_seed disagrees"), ConfigError);
}

TEST_CASE("suite specs default, validate, and round-trip") {
  const SuiteSpec spec = parse_suite_spec("{}");
  CHECK(spec.scenarios_per_type == 10);
  REQUIRE(spec.attack_types.size() == 4);
  CHECK(spec.attack_types[0] == AttackKind::none);
  CHECK(spec.base.scenario_id == "default");
  CHECK(spec.onset_s.lo == 0.1);
  CHECK(spec.onset_s.hi == 0.5);
  CHECK_NOTHROW(spec.validate());

  const std::string once = dump_suite_spec(spec);
  const SuiteSpec back = parse_suite_spec(once);
  CHECK(dump_suite_spec(back) == once);
  CHECK(suite_hash(back) == suite_hash(spec));
}

TEST_CASE("suite base and base_config are mutually exclusive") {
  const char* text = R"({
    "base": {"scenario_id": "inline"},
    "base_config": "other.json"
  })";
  CHECK_THROWS_WITH_AS((void)parse_suite_spec(text),
                       Contains("either base or base_config, not both"), ConfigError);
}

TEST_CASE("suite onsets must fit inside the scenario horizon") {
  const char* text = R"({
    "base": {"scenario_id": "short", "duration_s": 0.3},
    "variation": {"onset_s": [0.1, 0.5]}
  })";
  CHECK_THROWS_WITH_AS((void)parse_suite_spec(text),
                       Contains("onset_s must end before the scenario duration"),
                       ConfigError);
}

TEST_CASE("suite echo wrappers verify their hash") {
  const SuiteSpec spec = parse_suite_spec(R"({"scenarios_per_type": 3})");
  const std::string good = "{\"suite\": " + dump_suite_spec(spec) +
                           ", \"config_hash\": \"" + suite_hash(spec) + "\"}";
  const SuiteSpec back = parse_suite_spec(good);
  CHECK(back.scenarios_per_type == 3);

  const std::string tampered =
      "{\"suite\": " + dump_suite_spec(spec) +
      ", \"config_hash\": \"ffffffffffffffff\"}";
  CHECK_THROWS_WITH_AS((void)parse_suite_spec(tampered),
                       Contains("drop the config_hash field"), ConfigError);
}

TEST_CASE("invalid JSON is reported as such") {
  CHECK_THROWS_WITH_AS((void)parse_scenario_config("{nope"),
                       Contains("not valid JSON"), ConfigError);
  CHECK_THROWS_AS((void)load_scenario_config("/nonexistent/cfg.json"), ConfigError);
}
