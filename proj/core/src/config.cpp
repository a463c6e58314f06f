#include "snitchdt/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "snitchdt/errors.hpp"

namespace snitchdt {

using nlohmann::json;

namespace {

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(what + " is not valid JSON: " + e.what());
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str(), path);
}

void reject_unknown(const json& obj, const std::set<std::string>& allowed,
                    const std::string& ctx) {
  if (!obj.is_object()) throw ConfigError(ctx + " must be a JSON object");
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("unknown key \"" + key + "\" in " + ctx);
}

double get_num(const json& obj, const char* key, double fallback,
               const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(ctx + "." + key + " must be a number");
  return v.get<double>();
}

int get_int(const json& obj, const char* key, int fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(ctx + "." + key + " must be an integer");
  return v.get<int>();
}

long get_long(const json& obj, const char* key, long fallback, const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number_integer())
    throw ConfigError(ctx + "." + key + " must be an integer");
  return v.get<long>();
}

std::string get_str(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.contains(key)) throw ConfigError(ctx + "." + key + " is required");
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(ctx + "." + key + " must be a string");
  return v.get<std::string>();
}

Channel parse_channel(const std::string& s, const std::string& ctx) {
  if (s == "q_setpoint") return Channel::q_setpoint;
  if (s == "v_meas") return Channel::v_meas;
  if (s == "q_meas") return Channel::q_meas;
  if (s == "i_meas") return Channel::i_meas;
  throw ConfigError(ctx + ": unknown channel \"" + s + "\"");
}

AttackKind parse_kind(const std::string& s, const std::string& ctx) {
  if (s == "none") return AttackKind::none;
  if (s == "bias") return AttackKind::bias;
  if (s == "ramp") return AttackKind::ramp;
  if (s == "delay") return AttackKind::delay;
  if (s == "coordinated") return AttackKind::coordinated;
  throw ConfigError(ctx + ": unknown attack kind \"" + s + "\"");
}

MonitoredChannel parse_monitored(const std::string& s, const std::string& ctx) {
  if (s == "terminal_voltage") return MonitoredChannel::terminal_voltage;
  if (s == "reactive_power") return MonitoredChannel::reactive_power;
  throw ConfigError(ctx + ": unknown monitored_channel \"" + s + "\"");
}

std::vector<SetpointPoint> parse_schedule(const json& arr, const std::string& ctx) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError(ctx + " must be a non-empty array");
  std::vector<SetpointPoint> out;
  for (const auto& p : arr) {
    reject_unknown(p, {"t_s", "q"}, ctx + " entry");
    SetpointPoint sp;
    sp.t_s = get_num(p, "t_s", -1.0, ctx);
    if (!p.contains("t_s")) throw ConfigError(ctx + " entry is missing t_s");
    if (!p.contains("q")) throw ConfigError(ctx + " entry is missing q");
    sp.q = get_num(p, "q", 0.0, ctx);
    out.push_back(sp);
  }
  return out;
}

void validate_schedule(const std::vector<SetpointPoint>& s, const std::string& ctx) {
  if (s.empty()) throw ConfigError(ctx + ": schedule must be non-empty");
  if (s.front().t_s != 0.0)
    throw ConfigError(ctx + ": schedule must start at t_s = 0");
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!(s[i].t_s > s[i - 1].t_s))
      throw ConfigError(ctx + ": schedule times must be strictly increasing");
}

PlantParams parse_plant(const json& obj, double dt, const std::string& ctx) {
  PlantParams p;
  p.dt = dt;
  if (obj.is_null()) return p;
  if (obj.contains("dt"))
    throw ConfigError(ctx + ".dt is set by the top-level dt, not per node");
  reject_unknown(obj,
                 {"v_nom", "k_q", "t_c", "kp", "ki", "k_droop", "q_min", "q_max",
                  "p_fixed", "sigma_meas"},
                 ctx);
  p.v_nom = get_num(obj, "v_nom", p.v_nom, ctx);
  p.k_q = get_num(obj, "k_q", p.k_q, ctx);
  p.t_c = get_num(obj, "t_c", p.t_c, ctx);
  p.kp = get_num(obj, "kp", p.kp, ctx);
  p.ki = get_num(obj, "ki", p.ki, ctx);
  p.k_droop = get_num(obj, "k_droop", p.k_droop, ctx);
  p.q_min = get_num(obj, "q_min", p.q_min, ctx);
  p.q_max = get_num(obj, "q_max", p.q_max, ctx);
  p.p_fixed = get_num(obj, "p_fixed", p.p_fixed, ctx);
  p.sigma_meas = get_num(obj, "sigma_meas", p.sigma_meas, ctx);
  return p;
}

AttackSpec parse_attack(const json& obj, const std::string& ctx) {
  if (!obj.is_object()) throw ConfigError(ctx + " must be a JSON object");
  AttackSpec a;
  a.kind = parse_kind(get_str(obj, "kind", ctx), ctx);
  switch (a.kind) {
    case AttackKind::none:
      reject_unknown(obj, {"kind"}, ctx + " (kind none)");
      break;
    case AttackKind::bias:
      reject_unknown(obj, {"kind", "node", "channel", "t_start_s", "magnitude"},
                     ctx + " (kind bias)");
      a.node = get_str(obj, "node", ctx);
      a.t_start = get_num(obj, "t_start_s", 0.0, ctx);
      if (!obj.contains("magnitude"))
        throw ConfigError(ctx + ".magnitude is required for kind bias");
      a.magnitude = get_num(obj, "magnitude", 0.0, ctx);
      break;
    case AttackKind::ramp:
      reject_unknown(obj, {"kind", "node", "channel", "t_start_s", "slope"},
                     ctx + " (kind ramp)");
      a.node = get_str(obj, "node", ctx);
      a.t_start = get_num(obj, "t_start_s", 0.0, ctx);
      if (!obj.contains("slope"))
        throw ConfigError(ctx + ".slope is required for kind ramp");
      a.slope = get_num(obj, "slope", 0.0, ctx);
      break;
    case AttackKind::delay:
      reject_unknown(obj, {"kind", "node", "channel", "t_start_s", "delay_s"},
                     ctx + " (kind delay)");
      a.node = get_str(obj, "node", ctx);
      a.t_start = get_num(obj, "t_start_s", 0.0, ctx);
      if (!obj.contains("delay_s"))
        throw ConfigError(ctx + ".delay_s is required for kind delay");
      a.delay_s = get_num(obj, "delay_s", 0.0, ctx);
      break;
    case AttackKind::coordinated: {
      reject_unknown(obj, {"kind", "components"}, ctx + " (kind coordinated)");
      if (!obj.contains("components") || !obj.at("components").is_array())
        throw ConfigError(ctx + ".components must be an array for kind coordinated");
      int i = 0;
      for (const auto& c : obj.at("components"))
        a.components.push_back(
            parse_attack(c, ctx + ".components[" + std::to_string(i++) + "]"));
      break;
    }
  }
  if (obj.contains("channel"))
    a.channel = parse_channel(get_str(obj, "channel", ctx), ctx);
  return a;
}

json dump_schedule(const std::vector<SetpointPoint>& s) {
  json arr = json::array();
  for (const auto& p : s) arr.push_back({{"t_s", p.t_s}, {"q", p.q}});
  return arr;
}

json dump_attack(const AttackSpec& a) {
  json obj;
  obj["kind"] = to_string(a.kind);
  if (a.channel) obj["channel"] = to_string(*a.channel);
  switch (a.kind) {
    case AttackKind::none:
      break;
    case AttackKind::bias:
      obj["node"] = a.node;
      obj["t_start_s"] = a.t_start;
      obj["magnitude"] = a.magnitude;
      break;
    case AttackKind::ramp:
      obj["node"] = a.node;
      obj["t_start_s"] = a.t_start;
      obj["slope"] = a.slope;
      break;
    case AttackKind::delay:
      obj["node"] = a.node;
      obj["t_start_s"] = a.t_start;
      obj["delay_s"] = a.delay_s;
      break;
    case AttackKind::coordinated: {
      json comps = json::array();
      for (const auto& c : a.components) comps.push_back(dump_attack(c));
      obj["components"] = comps;
      break;
    }
  }
  return obj;
}

json dump_plant(const PlantParams& p) {
  return json{{"v_nom", p.v_nom},     {"k_q", p.k_q},
              {"t_c", p.t_c},         {"kp", p.kp},
              {"ki", p.ki},           {"k_droop", p.k_droop},
              {"q_min", p.q_min},     {"q_max", p.q_max},
              {"p_fixed", p.p_fixed}, {"sigma_meas", p.sigma_meas}};
}

std::vector<AttackKind> parse_attack_types(const json& arr, const std::string& ctx) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError(ctx + " must be a non-empty array");
  std::vector<AttackKind> kinds;
  for (const auto& k : arr) {
    if (!k.is_string()) throw ConfigError(ctx + " entries must be strings");
    kinds.push_back(parse_kind(k.get<std::string>(), ctx));
  }
  return kinds;
}

VariationRange parse_range(const json& obj, const char* key, VariationRange fallback,
                           const std::string& ctx) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
    throw ConfigError(ctx + "." + key + " must be a [lo, hi] number pair");
  return {v[0].get<double>(), v[1].get<double>()};
}

ScenarioConfig parse_scenario_json(const json& j, const std::string& ctx) {
  if (j.is_object() && j.contains("config")) {
    // Echo files wrap the document; accept them back and verify integrity.
    reject_unknown(j, {"config", "config_hash", "master_seed"}, ctx + " echo wrapper");
    ScenarioConfig cfg = parse_scenario_json(j.at("config"), ctx);
    if (j.contains("config_hash")) {
      const std::string recorded = get_str(j, "config_hash", ctx);
      if (recorded != config_hash(cfg))
        throw ConfigError(ctx +
                          ": config_hash does not match the wrapped config; drop "
                          "the config_hash field when deriving new configs");
    }
    if (j.contains("master_seed")) {
      const json& v = j.at("master_seed");
      if (!v.is_number_integer() ||
          (!v.is_number_unsigned() && v.get<long long>() < 0))
        throw ConfigError(ctx + ".master_seed must be a nonnegative integer");
      if (v.get<std::uint64_t>() != cfg.master_seed)
        throw ConfigError(ctx +
                          ": wrapper master_seed disagrees with the wrapped config");
    }
    return cfg;
  }
  reject_unknown(j,
                 {"scenario_id", "master_seed", "duration_s", "dt", "detectors",
                  "nodes", "setpoint_schedule", "attack", "twin", "network",
                  "consensus", "calibration", "ann"},
                 ctx);
  ScenarioConfig cfg = default_scenario_config();
  cfg.scenario_id = get_str(j, "scenario_id", ctx);
  if (j.contains("master_seed")) {
    const json& v = j.at("master_seed");
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<long long>() < 0))
      throw ConfigError(ctx + ".master_seed must be a nonnegative integer");
    cfg.master_seed = v.get<std::uint64_t>();
  }
  cfg.duration_s = get_num(j, "duration_s", cfg.duration_s, ctx);
  cfg.dt = get_num(j, "dt", cfg.dt, ctx);

  if (j.contains("detectors")) {
    const json& arr = j.at("detectors");
    if (!arr.is_array() || arr.empty())
      throw ConfigError(ctx + ".detectors must be a non-empty array");
    cfg.detectors.clear();
    for (const auto& d : arr) {
      if (!d.is_string()) throw ConfigError(ctx + ".detectors entries must be strings");
      const auto s = d.get<std::string>();
      if (s == "snitch")
        cfg.detectors.push_back(Detector::snitch);
      else if (s == "ann")
        cfg.detectors.push_back(Detector::ann);
      else
        throw ConfigError(ctx + ".detectors: unknown detector \"" + s + "\"");
    }
  }
  // Canonical set order; membership, not sequence, is what the list means.
  std::sort(cfg.detectors.begin(), cfg.detectors.end());
  if (std::adjacent_find(cfg.detectors.begin(), cfg.detectors.end()) !=
      cfg.detectors.end())
    throw ConfigError(ctx + ".detectors contains a duplicate entry");

  std::vector<SetpointPoint> shared_schedule;
  if (j.contains("setpoint_schedule")) {
    shared_schedule = parse_schedule(j.at("setpoint_schedule"), ctx + ".setpoint_schedule");
    validate_schedule(shared_schedule, ctx + ".setpoint_schedule");
  }

  if (j.contains("nodes")) {
    const json& arr = j.at("nodes");
    if (!arr.is_array() || arr.empty())
      throw ConfigError(ctx + ".nodes must be a non-empty array");
    cfg.nodes.clear();
    int i = 0;
    for (const auto& n : arr) {
      const std::string nctx = ctx + ".nodes[" + std::to_string(i++) + "]";
      reject_unknown(n, {"id", "plant", "setpoint_schedule"}, nctx);
      NodeConfig nc;
      nc.id = get_str(n, "id", nctx);
      nc.plant = parse_plant(n.contains("plant") ? n.at("plant") : json(), cfg.dt,
                             nctx + ".plant");
      if (n.contains("setpoint_schedule"))
        nc.schedule = parse_schedule(n.at("setpoint_schedule"), nctx + ".setpoint_schedule");
      cfg.nodes.push_back(std::move(nc));
    }
  }
  // A top-level schedule overrides defaulted nodes; a node's own entry wins.
  const bool nodes_from_json = j.contains("nodes");
  for (auto& n : cfg.nodes) {
    n.plant.dt = cfg.dt;
    if (!shared_schedule.empty() && (!nodes_from_json || n.schedule.empty()))
      n.schedule = shared_schedule;
    else if (n.schedule.empty())
      n.schedule = default_scenario_config().nodes[0].schedule;
  }

  if (j.contains("attack")) cfg.attack = parse_attack(j.at("attack"), ctx + ".attack");

  if (j.contains("twin")) {
    const json& t = j.at("twin");
    const std::string tctx = ctx + ".twin";
    reject_unknown(t, {"epsilon", "sigma_sq", "window_s", "monitored_channel", "sustain_m"},
                   tctx);
    if (t.contains("epsilon")) cfg.twin.epsilon = get_num(t, "epsilon", 0.0, tctx);
    if (t.contains("sigma_sq")) cfg.twin.sigma_sq = get_num(t, "sigma_sq", 0.0, tctx);
    cfg.twin.window_s = get_num(t, "window_s", cfg.twin.window_s, tctx);
    if (t.contains("monitored_channel"))
      cfg.twin.monitored_channel =
          parse_monitored(get_str(t, "monitored_channel", tctx), tctx);
    cfg.twin.sustain_m = get_int(t, "sustain_m", cfg.twin.sustain_m, tctx);
  }

  if (j.contains("network")) {
    const json& n = j.at("network");
    const std::string nctx = ctx + ".network";
    reject_unknown(n, {"report_period_steps", "latency_mean_s", "latency_jitter_s", "drop_prob"},
                   nctx);
    cfg.network.report_period_steps =
        get_int(n, "report_period_steps", cfg.network.report_period_steps, nctx);
    cfg.network.latency_mean_s = get_num(n, "latency_mean_s", cfg.network.latency_mean_s, nctx);
    cfg.network.latency_jitter_s =
        get_num(n, "latency_jitter_s", cfg.network.latency_jitter_s, nctx);
    cfg.network.drop_prob = get_num(n, "drop_prob", cfg.network.drop_prob, nctx);
  }

  if (j.contains("consensus")) {
    const json& c = j.at("consensus");
    const std::string cctx = ctx + ".consensus";
    reject_unknown(c, {"tau_alarm", "quorum_k", "coincidence_window_steps", "staleness_limit_steps"},
                   cctx);
    cfg.consensus.tau_alarm = get_num(c, "tau_alarm", cfg.consensus.tau_alarm, cctx);
    cfg.consensus.quorum_k = get_int(c, "quorum_k", cfg.consensus.quorum_k, cctx);
    cfg.consensus.coincidence_window_steps = get_long(
        c, "coincidence_window_steps", cfg.consensus.coincidence_window_steps, cctx);
    cfg.consensus.staleness_limit_steps = get_long(
        c, "staleness_limit_steps", cfg.consensus.staleness_limit_steps, cctx);
  }

  if (j.contains("calibration")) {
    const json& c = j.at("calibration");
    reject_unknown(c, {"duration_s"}, ctx + ".calibration");
    cfg.calibration.duration_s =
        get_num(c, "duration_s", cfg.calibration.duration_s, ctx + ".calibration");
  }

  if (j.contains("ann")) {
    const json& a = j.at("ann");
    const std::string actx = ctx + ".ann";
    reject_unknown(a,
                   {"n_m", "n_hidden", "learning_rate", "epochs", "batch_size",
                    "val_split", "train_runs", "train_duration_s", "subsample",
                    "level_min", "level_max", "step_t_s"},
                   actx);
    cfg.ann.n_m = get_int(a, "n_m", cfg.ann.n_m, actx);
    cfg.ann.train.n_hidden = get_int(a, "n_hidden", cfg.ann.train.n_hidden, actx);
    cfg.ann.train.learning_rate =
        get_num(a, "learning_rate", cfg.ann.train.learning_rate, actx);
    cfg.ann.train.epochs = get_int(a, "epochs", cfg.ann.train.epochs, actx);
    cfg.ann.train.batch_size = get_int(a, "batch_size", cfg.ann.train.batch_size, actx);
    cfg.ann.train.val_split = get_num(a, "val_split", cfg.ann.train.val_split, actx);
    cfg.ann.train_runs = get_int(a, "train_runs", cfg.ann.train_runs, actx);
    cfg.ann.train_duration_s =
        get_num(a, "train_duration_s", cfg.ann.train_duration_s, actx);
    cfg.ann.subsample = get_int(a, "subsample", cfg.ann.subsample, actx);
    cfg.ann.level_min = get_num(a, "level_min", cfg.ann.level_min, actx);
    cfg.ann.level_max = get_num(a, "level_max", cfg.ann.level_max, actx);
    cfg.ann.step_t_s = get_num(a, "step_t_s", cfg.ann.step_t_s, actx);
  }

  cfg.validate();
  return cfg;
}

json dump_scenario_json(const ScenarioConfig& cfg) {
  json j;
  j["scenario_id"] = cfg.scenario_id;
  j["master_seed"] = cfg.master_seed;
  j["duration_s"] = cfg.duration_s;
  j["dt"] = cfg.dt;
  json det = json::array();
  for (auto d : cfg.detectors) det.push_back(to_string(d));
  j["detectors"] = det;
  json nodes = json::array();
  for (const auto& n : cfg.nodes) {
    json nj;
    nj["id"] = n.id;
    nj["plant"] = dump_plant(n.plant);
    nj["setpoint_schedule"] = dump_schedule(n.schedule);
    nodes.push_back(nj);
  }
  j["nodes"] = nodes;
  j["attack"] = dump_attack(cfg.attack);
  json t;
  if (cfg.twin.epsilon) t["epsilon"] = *cfg.twin.epsilon;
  if (cfg.twin.sigma_sq) t["sigma_sq"] = *cfg.twin.sigma_sq;
  t["window_s"] = cfg.twin.window_s;
  t["monitored_channel"] = to_string(cfg.twin.monitored_channel);
  t["sustain_m"] = cfg.twin.sustain_m;
  j["twin"] = t;
  j["network"] = {{"report_period_steps", cfg.network.report_period_steps},
                  {"latency_mean_s", cfg.network.latency_mean_s},
                  {"latency_jitter_s", cfg.network.latency_jitter_s},
                  {"drop_prob", cfg.network.drop_prob}};
  j["consensus"] = {{"tau_alarm", cfg.consensus.tau_alarm},
                    {"quorum_k", cfg.consensus.quorum_k},
                    {"coincidence_window_steps", cfg.consensus.coincidence_window_steps},
                    {"staleness_limit_steps", cfg.consensus.staleness_limit_steps}};
  j["calibration"] = {{"duration_s", cfg.calibration.duration_s}};
  j["ann"] = {{"n_m", cfg.ann.n_m},
              {"n_hidden", cfg.ann.train.n_hidden},
              {"learning_rate", cfg.ann.train.learning_rate},
              {"epochs", cfg.ann.train.epochs},
              {"batch_size", cfg.ann.train.batch_size},
              {"val_split", cfg.ann.train.val_split},
              {"train_runs", cfg.ann.train_runs},
              {"train_duration_s", cfg.ann.train_duration_s},
              {"subsample", cfg.ann.subsample},
              {"level_min", cfg.ann.level_min},
              {"level_max", cfg.ann.level_max},
              {"step_t_s", cfg.ann.step_t_s}};
  return j;
}

}  // namespace

const char* to_string(Detector d) {
  switch (d) {
    case Detector::snitch: return "snitch";
    case Detector::ann: return "ann";
  }
  return "?";
}

double schedule_value(const std::vector<SetpointPoint>& schedule, double t) {
  if (schedule.empty()) throw ConfigError("setpoint schedule is empty");
  double q = schedule.front().q;
  for (const auto& p : schedule) {
    if (p.t_s <= t)
      q = p.q;
    else
      break;
  }
  return q;
}

void AnnConfig::validate() const {
  train.validate();
  if (n_m < 1) throw ConfigError("ann.n_m must be >= 1");
  if (train_runs < 1) throw ConfigError("ann.train_runs must be >= 1");
  if (!(train_duration_s > 0.0)) throw ConfigError("ann.train_duration_s must be > 0");
  if (subsample < 1) throw ConfigError("ann.subsample must be >= 1");
  if (!(level_min >= 0.0) || !(level_max > level_min))
    throw ConfigError("ann.level_min/level_max must satisfy 0 <= min < max");
  if (!(step_t_s > 0.0 && step_t_s < train_duration_s))
    throw ConfigError("ann.step_t_s must lie inside (0, train_duration_s)");
}

void ScenarioConfig::validate() const {
  if (scenario_id.empty()) throw ConfigError("scenario_id must be non-empty");
  if (!(duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
  if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
  const double ratio = duration_s / dt;
  if (std::abs(ratio - std::llround(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("duration_s must be an integer multiple of dt");
  if (detectors.empty()) throw ConfigError("detectors must be non-empty");
  if (nodes.empty()) throw ConfigError("nodes must be non-empty");
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (n.id.empty()) throw ConfigError("node id must be non-empty");
    if (!ids.insert(n.id).second)
      throw ConfigError("duplicate node id \"" + n.id + "\"");
    if (n.plant.dt != dt)
      throw ConfigError("node \"" + n.id + "\": plant dt does not match scenario dt");
    n.plant.validate();
    validate_schedule(n.schedule, "node \"" + n.id + "\"");
  }
  attack.validate();
  for (const auto& target : attack.target_nodes())
    if (!ids.count(target))
      throw ConfigError("attack targets unknown node \"" + target + "\"");
  twin.validate(dt);
  network.validate();
  consensus.validate();
  if (!(calibration.duration_s > 0.0))
    throw ConfigError("calibration.duration_s must be > 0");
  ann.validate();
}

long ScenarioConfig::total_steps() const {
  return std::llround(duration_s / dt);
}

bool ScenarioConfig::has_detector(Detector d) const {
  return std::find(detectors.begin(), detectors.end(), d) != detectors.end();
}

ScenarioConfig default_scenario_config() {
  ScenarioConfig cfg;
  cfg.scenario_id = "default";
  const std::vector<SetpointPoint> schedule{{0.0, 0.2}, {0.6, 0.3}};
  for (const char* id : {"bus1", "bus5", "bus21", "bus26"}) {
    NodeConfig n;
    n.id = id;
    n.plant.dt = cfg.dt;
    n.schedule = schedule;
    cfg.nodes.push_back(std::move(n));
  }
  return cfg;
}

ScenarioConfig load_scenario_config(const std::string& path) {
  return parse_scenario_json(read_file(path), "config");
}

ScenarioConfig parse_scenario_config(const std::string& json_text) {
  return parse_scenario_json(parse_text(json_text, "config text"), "config");
}

std::string dump_scenario_config(const ScenarioConfig& cfg) {
  return dump_scenario_json(cfg).dump(2) + "\n";
}

std::string config_hash(const ScenarioConfig& cfg) {
  const std::uint64_t h = fnv1a64(dump_scenario_config(cfg));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void SuiteSpec::validate() const {
  if (attack_types.empty()) throw ConfigError("suite.attack_types must be non-empty");
  if (scenarios_per_type < 1)
    throw ConfigError("suite.scenarios_per_type must be >= 1");
  base.validate();
  auto check = [](const VariationRange& r, const char* name, bool positive) {
    if (!(r.lo <= r.hi))
      throw ConfigError(std::string("suite.variation.") + name + ": lo must be <= hi");
    if (positive && !(r.lo > 0.0))
      throw ConfigError(std::string("suite.variation.") + name + ": lo must be > 0");
  };
  check(onset_s, "onset_s", true);
  check(bias_magnitude, "bias_magnitude", true);
  check(ramp_slope, "ramp_slope", true);
  check(delay_s, "delay_s", true);
  if (!(onset_s.hi < base.duration_s))
    throw ConfigError("suite.variation.onset_s must end before the scenario duration");
}

namespace {

SuiteSpec parse_suite_json(const json& j, const std::string& base_dir) {
  if (j.is_object() && j.contains("suite")) {
    // Echo files wrap the document; accept them back and verify integrity.
    reject_unknown(j, {"suite", "config_hash", "master_seed"}, "suite echo wrapper");
    SuiteSpec spec = parse_suite_json(j.at("suite"), base_dir);
    if (j.contains("config_hash")) {
      const std::string recorded = get_str(j, "config_hash", "suite");
      if (recorded != suite_hash(spec))
        throw ConfigError(
            "suite: config_hash does not match the wrapped suite spec; drop "
            "the config_hash field when deriving new specs");
    }
    return spec;
  }
  reject_unknown(j,
                 {"attack_types", "scenarios_per_type", "base", "base_config", "variation"},
                 "suite");
  SuiteSpec spec;
  spec.base = default_scenario_config();
  if (j.contains("base") && j.contains("base_config"))
    throw ConfigError("suite: specify either base or base_config, not both");
  if (j.contains("base")) {
    spec.base = parse_scenario_json(j.at("base"), "suite.base");
  } else if (j.contains("base_config")) {
    std::filesystem::path p = get_str(j, "base_config", "suite");
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    spec.base = load_scenario_config(p.string());
  }
  if (j.contains("attack_types"))
    spec.attack_types = parse_attack_types(j.at("attack_types"), "suite.attack_types");
  spec.scenarios_per_type =
      get_int(j, "scenarios_per_type", spec.scenarios_per_type, "suite");
  if (j.contains("variation")) {
    const json& v = j.at("variation");
    reject_unknown(v, {"onset_s", "bias_magnitude", "ramp_slope", "delay_s"},
                   "suite.variation");
    spec.onset_s = parse_range(v, "onset_s", spec.onset_s, "suite.variation");
    spec.bias_magnitude =
        parse_range(v, "bias_magnitude", spec.bias_magnitude, "suite.variation");
    spec.ramp_slope = parse_range(v, "ramp_slope", spec.ramp_slope, "suite.variation");
    spec.delay_s = parse_range(v, "delay_s", spec.delay_s, "suite.variation");
  }
  spec.validate();
  return spec;
}

}  // namespace

SuiteSpec parse_suite_spec(const std::string& json_text, const std::string& base_dir) {
  return parse_suite_json(parse_text(json_text, "suite spec"), base_dir);
}

SuiteSpec load_suite_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open suite spec: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_suite_spec(ss.str(),
                          std::filesystem::path(path).parent_path().string());
}

std::string dump_suite_spec(const SuiteSpec& spec) {
  json j;
  json kinds = json::array();
  for (auto k : spec.attack_types) kinds.push_back(to_string(k));
  j["attack_types"] = kinds;
  j["scenarios_per_type"] = spec.scenarios_per_type;
  j["base"] = json::parse(dump_scenario_config(spec.base));
  j["variation"] = {{"onset_s", {spec.onset_s.lo, spec.onset_s.hi}},
                    {"bias_magnitude", {spec.bias_magnitude.lo, spec.bias_magnitude.hi}},
                    {"ramp_slope", {spec.ramp_slope.lo, spec.ramp_slope.hi}},
                    {"delay_s", {spec.delay_s.lo, spec.delay_s.hi}}};
  return j.dump(2) + "\n";
}

std::string suite_hash(const SuiteSpec& spec) {
  const std::uint64_t h = fnv1a64(dump_suite_spec(spec));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace snitchdt
