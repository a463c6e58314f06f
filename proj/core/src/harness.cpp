#include "snitchdt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <utility>

#include "json.hpp"
#include "snitchdt/attack.hpp"
#include "snitchdt/errors.hpp"
#include "snitchdt/rng.hpp"

namespace snitchdt {

namespace fs = std::filesystem;
using nlohmann::json;
using clock_type = std::chrono::steady_clock;

namespace {

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

std::string format_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Start index of the first run of m consecutive true values, anywhere.
std::optional<long> first_sustained_start(const std::vector<bool>& raw, int m) {
  int run = 0;
  for (std::size_t s = 0; s < raw.size(); ++s) {
    run = raw[s] ? run + 1 : 0;
    if (run >= m) return static_cast<long>(s) - (m - 1);
  }
  return std::nullopt;
}

json opt_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_out(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw SimulationError("cannot open output file: " + path);
  return f;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimulationError("cannot open output file: " + path);
  out << text;
}

void write_header_comment(std::FILE* f, std::uint64_t master_seed,
                          const std::string& hash) {
  std::fprintf(f, "# master_seed=%llu config_hash=%s\n",
               static_cast<unsigned long long>(master_seed), hash.c_str());
}

void write_trace(const std::string& path, const ScenarioResult& res,
                 std::uint64_t master_seed, const std::string& hash) {
  FilePtr f = open_out(path);
  write_header_comment(f.get(), master_seed, hash);
  std::fprintf(f.get(),
               "step,time_s,node,v_g_true,v_g_meas,q_g_true,q_g_meas,"
               "q_setpoint_received,twin_pred,residual,tau,local_alarm,verdict\n");
  std::size_t rows = res.verdict_by_step.size();
  for (const auto& n : res.nodes) rows = std::min(rows, n.v_true.size());
  for (std::size_t k = 0; k < rows; ++k) {
    for (const auto& n : res.nodes) {
      std::fprintf(f.get(), "%zu,%.6f,%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%d,%s\n",
                   k, static_cast<double>(k) * res.trace_dt, n.id.c_str(), n.v_true[k],
                   n.v_meas[k], n.q_true[k], n.q_meas[k], n.s_recv[k], n.twin_pred[k],
                   n.residual[k], n.tau[k], n.local_alarm[k] ? 1 : 0,
                   res.verdict_by_step[k].c_str());
    }
  }
}

void write_calibration(const std::string& path, const std::vector<NodeConfig>& nodes,
                       const std::vector<Calibration>& calib,
                       std::uint64_t master_seed, const std::string& hash) {
  json j;
  j["master_seed"] = master_seed;
  j["config_hash"] = hash;
  json per_node;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    per_node[nodes[i].id] = {{"epsilon", calib[i].epsilon},
                             {"sigma_sq", calib[i].sigma_sq}};
  j["nodes"] = per_node;
  write_text(path, j.dump(2) + "\n");
}

void write_scenario_echo(const std::string& path, const ScenarioConfig& cfg) {
  json j;
  j["config"] = json::parse(dump_scenario_config(cfg));
  j["config_hash"] = config_hash(cfg);
  j["master_seed"] = cfg.master_seed;
  write_text(path, j.dump(2) + "\n");
}

void write_suite_echo(const std::string& path, const SuiteSpec& spec) {
  json j;
  j["suite"] = json::parse(dump_suite_spec(spec));
  j["config_hash"] = suite_hash(spec);
  j["master_seed"] = spec.base.master_seed;
  write_text(path, j.dump(2) + "\n");
}

json reference_targets_json() {
  // Published reference points recorded next to measured values; orderings are
  // the reproduction target, the absolute numbers are not pass/fail bounds.
  return json{{"accuracy", 0.95},
              {"fpr", 0.10},
              {"fnr", 0.08},
              {"detection_delay_steps", {{"snitch", 100}, {"ann", 600}}},
              {"rmse_pu", {{"snitch", 0.05}, {"ann", 0.25}}}};
}

struct DetectorAggregate {
  MetricsReport report;
  std::vector<ScenarioScore> scores;
  std::vector<double> roc_scores;
  std::vector<bool> roc_labels;
  std::optional<RocCurve> roc;
};

void finalize_aggregate(DetectorAggregate& agg, long horizon) {
  (void)horizon;
  MetricsReport& r = agg.report;
  if (!agg.scores.empty()) {
    std::vector<bool> predicted, label;
    for (const auto& s : agg.scores) {
      label.push_back(s.attack_present);
      predicted.push_back(s.attack_present ? s.detected : s.false_alarm);
    }
    r.scenario_counts = confusion(predicted, label);
    r.scenario_metrics = basic_metrics(r.scenario_counts);
    r.f1 = f1_score(r.scenario_metrics.precision, r.scenario_metrics.recall);
    double delay_sum = 0.0, rmse_sum = 0.0;
    long n_attack = 0;
    for (const auto& s : agg.scores) {
      if (s.false_alarm) ++r.false_alarm_scenarios;
      if (!s.attack_present) continue;
      ++n_attack;
      if (s.detected) ++r.detected_scenarios;
      delay_sum += static_cast<double>(s.censored_delay_steps);
      if (s.rmse_pu) rmse_sum += *s.rmse_pu;
    }
    r.attack_scenarios = n_attack;
    if (n_attack > 0) {
      r.mean_detection_delay_steps = delay_sum / static_cast<double>(n_attack);
      r.mean_rmse_pu = rmse_sum / static_cast<double>(n_attack);
    }
  }
  try {
    agg.roc = roc_curve(agg.roc_scores, agg.roc_labels, 200);
    r.auc = agg.roc->auc;
  } catch (const ConfigError&) {
    agg.roc.reset();  // single-class pooled labels (e.g. healthy-only data)
  }
}

json score_json(const ScenarioScore& s) {
  json j;
  j["scenario_id"] = s.scenario_id;
  j["attack_kind"] = to_string(s.kind);
  j["label"] = s.attack_present;
  j["predicted"] = s.attack_present ? s.detected : s.false_alarm;
  j["false_alarm"] = s.false_alarm;
  j["onset_step"] = s.onset_step;
  j["delay_steps"] = s.delay_steps ? json(*s.delay_steps) : json(nullptr);
  j["rmse_pu"] = opt_json(s.rmse_pu);
  return j;
}

json aggregate_json(const DetectorAggregate& agg) {
  const MetricsReport& r = agg.report;
  json j;
  j["confusion"] = {{"tp", r.scenario_counts.tp},
                    {"tn", r.scenario_counts.tn},
                    {"fp", r.scenario_counts.fp},
                    {"fn", r.scenario_counts.fn}};
  j["accuracy"] = r.scenario_metrics.accuracy;
  j["precision"] = opt_json(r.scenario_metrics.precision);
  j["recall"] = opt_json(r.scenario_metrics.recall);
  j["f1"] = opt_json(r.f1);
  j["fpr"] = opt_json(r.scenario_metrics.fpr);
  j["fnr"] = opt_json(r.scenario_metrics.fnr);
  j["mean_detection_delay_steps"] = r.mean_detection_delay_steps;
  j["mean_rmse_pu"] = r.mean_rmse_pu;
  j["auc"] = opt_json(r.auc);
  j["attack_scenarios"] = r.attack_scenarios;
  j["detected_scenarios"] = r.detected_scenarios;
  j["false_alarm_scenarios"] = r.false_alarm_scenarios;
  json per = json::array();
  for (const auto& s : agg.scores) per.push_back(score_json(s));
  j["per_scenario"] = per;
  return j;
}

void write_metrics_json(const std::string& path,
                        const std::map<Detector, DetectorAggregate>& aggs,
                        std::uint64_t master_seed, const std::string& hash,
                        std::size_t scenario_count,
                        const std::vector<std::pair<std::string, std::string>>& failures) {
  json j;
  j["master_seed"] = master_seed;
  j["config_hash"] = hash;
  j["scenario_count"] = scenario_count;
  j["failed_scenarios"] = failures.size();
  json fj = json::array();
  for (const auto& [id, what] : failures) fj.push_back({{"scenario_id", id}, {"error", what}});
  j["failures"] = fj;
  j["reference_targets"] = reference_targets_json();
  json det;
  for (const auto& [d, agg] : aggs) det[to_string(d)] = aggregate_json(agg);
  j["detectors"] = det;
  write_text(path, j.dump(2) + "\n");
}

void write_metrics_csv(const std::string& path,
                       const std::map<Detector, DetectorAggregate>& aggs,
                       std::uint64_t master_seed, const std::string& hash) {
  FilePtr f = open_out(path);
  write_header_comment(f.get(), master_seed, hash);
  std::fprintf(f.get(),
               "detector,scenario_id,attack_kind,label,predicted,false_alarm,"
               "onset_step,delay_steps,rmse_pu,accuracy,precision,recall,f1,fpr,fnr,"
               "mean_delay_steps,mean_rmse_pu,auc\n");
  auto opt_cell = [](const std::optional<double>& v) {
    return v ? format_num(*v) : std::string();
  };
  for (const auto& [d, agg] : aggs) {
    for (const auto& s : agg.scores) {
      std::fprintf(f.get(), "%s,%s,%s,%d,%d,%d,%ld,%s,%s,,,,,,,,,\n", to_string(d),
                   s.scenario_id.c_str(), to_string(s.kind), s.attack_present ? 1 : 0,
                   (s.attack_present ? s.detected : s.false_alarm) ? 1 : 0,
                   s.false_alarm ? 1 : 0, s.onset_step,
                   s.delay_steps ? std::to_string(*s.delay_steps).c_str() : "",
                   opt_cell(s.rmse_pu).c_str());
    }
    const MetricsReport& r = agg.report;
    std::fprintf(f.get(), "%s,AGGREGATE,,,,%ld,,,,%s,%s,%s,%s,%s,%s,%s,%s,%s\n",
                 to_string(d), r.false_alarm_scenarios,
                 format_num(r.scenario_metrics.accuracy).c_str(),
                 opt_cell(r.scenario_metrics.precision).c_str(),
                 opt_cell(r.scenario_metrics.recall).c_str(), opt_cell(r.f1).c_str(),
                 opt_cell(r.scenario_metrics.fpr).c_str(),
                 opt_cell(r.scenario_metrics.fnr).c_str(),
                 format_num(r.mean_detection_delay_steps).c_str(),
                 format_num(r.mean_rmse_pu).c_str(), opt_cell(r.auc).c_str());
  }
}

void write_roc_csv(const std::string& path, const RocCurve& curve,
                   std::uint64_t master_seed, const std::string& hash) {
  FilePtr f = open_out(path);
  write_header_comment(f.get(), master_seed, hash);
  std::fprintf(f.get(), "threshold,fpr,tpr\n");
  for (const auto& p : curve.points)
    std::fprintf(f.get(), "%.10g,%.10g,%.10g\n", p.threshold, p.fpr, p.tpr);
}

void write_roc_summary(const std::string& path,
                       const std::map<Detector, DetectorAggregate>& aggs,
                       std::uint64_t master_seed, const std::string& hash) {
  json j;
  j["master_seed"] = master_seed;
  j["config_hash"] = hash;
  json det;
  for (const auto& [d, agg] : aggs) {
    if (!agg.roc) continue;
    long pos = 0;
    for (bool b : agg.roc_labels) pos += b ? 1 : 0;
    det[to_string(d)] = {{"auc", agg.roc->auc},
                         {"n_points", agg.roc_labels.size()},
                         {"n_pos", pos},
                         {"n_neg", static_cast<long>(agg.roc_labels.size()) - pos}};
  }
  j["detectors"] = det;
  write_text(path, j.dump(2) + "\n");
}

void write_timing(const std::string& path, const DetectorTiming& timing, double wall_s,
                  std::uint64_t master_seed, const std::string& hash) {
  // Wall-clock sidecar: the one artifact exempt from byte-determinism.
  json j;
  j["master_seed"] = master_seed;
  j["config_hash"] = hash;
  j["compute_time_s"] = {{"snitch", timing.snitch_s}, {"ann", timing.ann_s}};
  j["wall_time_s"] = wall_s;
  write_text(path, j.dump(2) + "\n");
}

void pool_roc(DetectorAggregate& agg, const ScenarioResult& res, Detector d) {
  for (const auto& n : res.nodes) {
    const std::vector<double>& score = d == Detector::snitch ? n.residual : n.ann_dev;
    for (std::size_t k = 0; k < score.size(); ++k) {
      agg.roc_scores.push_back(d == Detector::snitch ? std::abs(score[k]) : score[k]);
      agg.roc_labels.push_back(n.truth[k]);
    }
  }
}

}  // namespace

std::vector<Calibration> calibrate_nodes(const ScenarioConfig& cfg) {
  cfg.validate();
  std::vector<Calibration> out;
  if (cfg.twin.epsilon && cfg.twin.sigma_sq) {
    out.assign(cfg.nodes.size(), {*cfg.twin.sigma_sq, *cfg.twin.epsilon});
    return out;
  }
  const long steps = std::llround(cfg.calibration.duration_s / cfg.dt);
  for (const auto& node : cfg.nodes) {
    Rng rng(derive_seed(cfg.master_seed, "calib", node.id, ""));
    PlantState plant = equilibrium_state(schedule_value(node.schedule, 0.0), node.plant);
    DigitalTwin twin(node.plant, plant, cfg.twin.monitored_channel);
    std::vector<double> residuals;
    residuals.reserve(steps);
    NodeTelemetry prev;
    prev.v_g_meas = plant.v_g + node.plant.sigma_meas * rng.gaussian();
    prev.i_g_meas = plant.i_g + node.plant.sigma_meas * rng.gaussian();
    prev.q_g_meas = plant.q_g + node.plant.sigma_meas * rng.gaussian();
    for (long k = 1; k <= steps; ++k) {
      const double t = static_cast<double>(k) * cfg.dt;
      const double s_clean = schedule_value(node.schedule, t);
      ControllerInputs in{s_clean, prev.v_g_meas, prev.q_g_meas};
      const NodeTelemetry telem = plant_step(plant, in, node.plant, rng);
      const double pred = twin.step(s_clean);
      const double measured = cfg.twin.monitored_channel == MonitoredChannel::terminal_voltage
                                  ? telem.v_g_meas
                                  : telem.q_g_meas;
      residuals.push_back(residual(measured, pred));
      prev = telem;
    }
    Calibration c = calibrate(residuals);
    if (cfg.twin.epsilon) c.epsilon = *cfg.twin.epsilon;
    if (cfg.twin.sigma_sq) c.sigma_sq = *cfg.twin.sigma_sq;
    out.push_back(c);
  }
  return out;
}

AnnModel train_baseline(const ScenarioConfig& cfg) {
  const AnnConfig& a = cfg.ann;
  Rng rng(derive_seed(cfg.master_seed, "ann-data", "", ""));
  const PlantParams& pp = cfg.nodes.front().plant;
  const long steps = std::llround(a.train_duration_s / cfg.dt);

  auto generate_run = [&](std::vector<AnnSample>& out) {
    const double l1 = rng.uniform(a.level_min, a.level_max);
    const double l2 = rng.uniform(a.level_min, a.level_max);
    const std::vector<SetpointPoint> sched{{0.0, l1}, {a.step_t_s, l2}};
    PlantState plant = equilibrium_state(l1, pp);
    std::vector<double> v_hist, i_hist;
    v_hist.reserve(steps + 1);
    i_hist.reserve(steps + 1);
    // Initial sensor snapshot, same draw order v, i, q as the scenario loop.
    v_hist.push_back(plant.v_g + pp.sigma_meas * rng.gaussian());
    i_hist.push_back(plant.i_g + pp.sigma_meas * rng.gaussian());
    double prev_q = plant.q_g + pp.sigma_meas * rng.gaussian();
    for (long k = 1; k <= steps; ++k) {
      const double t = static_cast<double>(k) * cfg.dt;
      const double s_clean = schedule_value(sched, t);
      ControllerInputs in{s_clean, v_hist.back(), prev_q};
      const NodeTelemetry telem = plant_step(plant, in, pp, rng);
      v_hist.push_back(telem.v_g_meas);
      i_hist.push_back(telem.i_g_meas);
      prev_q = telem.q_g_meas;
      if (k + 1 >= a.n_m && k % a.subsample == 0)
        out.push_back({build_features(v_hist, i_hist, a.n_m), s_clean, telem.q_g_meas});
    }
  };

  std::vector<AnnSample> train_rows, holdout_rows;
  for (int r = 0; r < a.train_runs; ++r) generate_run(train_rows);
  for (int r = 0; r < 2; ++r) generate_run(holdout_rows);

  TrainConfig tc = a.train;
  tc.seed = derive_seed(cfg.master_seed, "ann-train", "", "");
  AnnModel model = train_sgd(train_rows, a.n_m, tc);
  model.epsilon_ann = calibrate_ann_threshold(model, holdout_rows);
  return model;
}

ScenarioResult simulate_scenario(const ScenarioConfig& cfg,
                                 const std::vector<Calibration>& calib,
                                 const AnnModel* ann) {
  cfg.validate();
  if (calib.size() != cfg.nodes.size())
    throw ConfigError("calibration entries do not match the node list");

  const long total = cfg.total_steps();
  const double dt = cfg.dt;
  const int sustain_m = cfg.twin.sustain_m;
  const std::size_t n_window = cfg.twin.window_samples(dt);
  const std::size_t hist_cap = delay_lag_steps(cfg.attack.max_delay_s(), dt) + 1;
  const AttackSpec& spec = cfg.attack;

  ScenarioResult res;
  res.scenario_id = cfg.scenario_id;
  res.attack_kind = spec.kind;
  res.trace_dt = dt;

  struct NodeRt {
    PlantState plant;
    DigitalTwin twin;
    Rng rng;
    ChannelHistory s_hist, v_hist, q_hist, i_hist;
    ResidualWindow window;
    NodeTelemetry prev;
    double epsilon = 0.0, sigma_sq = 0.0;
    int consec = 0;
    bool twin_failed = false;
    double last_pred = 0.0;
    std::vector<double> v_feat, i_feat;  // post-attack measurements for the ann
  };
  std::vector<NodeRt> rt;
  rt.reserve(cfg.nodes.size());
  res.nodes.resize(cfg.nodes.size());

  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    const NodeConfig& nc = cfg.nodes[i];
    const PlantState init = equilibrium_state(schedule_value(nc.schedule, 0.0), nc.plant);
    rt.push_back(NodeRt{init,
                        DigitalTwin(nc.plant, init, cfg.twin.monitored_channel),
                        Rng(derive_seed(cfg.master_seed, "meas", nc.id, cfg.scenario_id)),
                        ChannelHistory(hist_cap, dt), ChannelHistory(hist_cap, dt),
                        ChannelHistory(hist_cap, dt), ChannelHistory(hist_cap, dt),
                        ResidualWindow(n_window),
                        {},
                        cfg.twin.epsilon.value_or(calib[i].epsilon),
                        cfg.twin.sigma_sq.value_or(calib[i].sigma_sq)});
    NodeSeries& series = res.nodes[i];
    series.id = nc.id;
    series.calib = {rt.back().sigma_sq, rt.back().epsilon};
    const auto reserve = static_cast<std::size_t>(total) + 1;
    for (auto* v : {&series.v_true, &series.v_meas, &series.q_true, &series.q_meas,
                    &series.s_recv, &series.twin_pred, &series.clean_q_ref,
                    &series.residual, &series.tau, &series.ann_dev})
      v->reserve(reserve);
  }

  SimulatedNetwork net(cfg.network, dt,
                       derive_seed(cfg.master_seed, "net", "", cfg.scenario_id));
  std::vector<std::string> ids;
  for (const auto& n : cfg.nodes) ids.push_back(n.id);
  ConsensusTracker tracker(cfg.consensus, ids);
  res.verdict_by_step.reserve(total + 1);

  auto record_step = [&](std::size_t i, double t, const NodeTelemetry& telem,
                         double s_recv) {
    NodeRt& r = rt[i];
    NodeSeries& series = res.nodes[i];

    double pred;
    if (!r.twin_failed) {
      pred = r.twin.predicted_output();
    } else {
      pred = r.last_pred;
    }
    r.last_pred = pred;

    double resid, tau;
    bool raw;
    const auto t0 = clock_type::now();
    if (r.twin_failed) {
      // An untrusted replica reports minimum trust rather than silence.
      resid = 0.0;
      raw = true;
      r.consec = sustain_m;
      tau = 1e-300;
    } else {
      const double measured =
          cfg.twin.monitored_channel == MonitoredChannel::terminal_voltage
              ? telem.v_g_meas
              : telem.q_g_meas;
      resid = residual(measured, pred);
      r.window.push(resid);
      raw = detect(resid, r.epsilon);
      r.consec = raw ? r.consec + 1 : 0;
      tau = trust_score(r.window, r.sigma_sq, n_window);
    }
    const bool local = r.consec >= sustain_m;
    res.timing.snitch_s += seconds_since(t0);

    double dev = 0.0;
    bool ann_raw = false;
    if (ann) {
      const auto t1 = clock_type::now();
      r.v_feat.push_back(telem.v_g_meas);
      r.i_feat.push_back(telem.i_g_meas);
      if (r.v_feat.size() >= static_cast<std::size_t>(ann->n_m)) {
        const double q_hat = ann->predict(build_features(r.v_feat, r.i_feat, ann->n_m));
        dev = std::abs(telem.q_g_meas - q_hat);
        ann_raw = ann_detect(telem.q_g_meas, q_hat, ann->epsilon_ann);
      }
      res.timing.ann_s += seconds_since(t1);
    }

    const bool truth = ground_truth(spec, series.id, t);
    if (truth && series.onset_step < 0)
      series.onset_step = static_cast<long>(series.v_true.size());

    series.v_true.push_back(telem.v_g_true);
    series.v_meas.push_back(telem.v_g_meas);
    series.q_true.push_back(telem.q_g_true);
    series.q_meas.push_back(telem.q_g_meas);
    series.s_recv.push_back(s_recv);
    series.twin_pred.push_back(pred);
    series.clean_q_ref.push_back(r.twin.model_state().q_g);
    series.residual.push_back(resid);
    series.tau.push_back(tau);
    series.ann_dev.push_back(dev);
    series.detect_raw.push_back(raw);
    series.local_alarm.push_back(local);
    series.ann_raw.push_back(ann_raw);
    series.truth.push_back(truth);
    return std::pair<double, bool>(tau, local);
  };

  long k = 0;
  try {
    // Step 0: sensor snapshot of the initial state; nothing is actuated yet.
    for (std::size_t i = 0; i < rt.size(); ++i) {
      NodeRt& r = rt[i];
      const NodeConfig& nc = cfg.nodes[i];
      const double s_clean = schedule_value(nc.schedule, 0.0);
      r.s_hist.record(s_clean);
      const double s_recv =
          apply_attack(spec, nc.id, Channel::q_setpoint, s_clean, r.s_hist, 0.0);
      NodeTelemetry telem;
      telem.step = 0;
      telem.v_g_true = r.plant.v_g;
      telem.q_g_true = r.plant.q_g;
      telem.v_g_meas = r.plant.v_g + nc.plant.sigma_meas * r.rng.gaussian();
      telem.i_g_meas = r.plant.i_g + nc.plant.sigma_meas * r.rng.gaussian();
      telem.q_g_meas = r.plant.q_g + nc.plant.sigma_meas * r.rng.gaussian();
      telem.q_setpoint_received = s_recv;
      r.v_hist.record(telem.v_g_meas);
      r.i_hist.record(telem.i_g_meas);
      r.q_hist.record(telem.q_g_meas);
      telem.v_g_meas = apply_attack(spec, nc.id, Channel::v_meas, telem.v_g_meas, r.v_hist, 0.0);
      telem.i_g_meas = apply_attack(spec, nc.id, Channel::i_meas, telem.i_g_meas, r.i_hist, 0.0);
      telem.q_g_meas = apply_attack(spec, nc.id, Channel::q_meas, telem.q_g_meas, r.q_hist, 0.0);
      r.prev = telem;
      record_step(i, 0.0, telem, s_recv);
    }
    res.verdict_by_step.push_back("none");

    for (k = 1; k <= total; ++k) {
      const double t = static_cast<double>(k) * dt;
      for (std::size_t i = 0; i < rt.size(); ++i) {
        NodeRt& r = rt[i];
        const NodeConfig& nc = cfg.nodes[i];
        const double s_clean = schedule_value(nc.schedule, t);
        r.s_hist.record(s_clean);
        const double s_recv =
            apply_attack(spec, nc.id, Channel::q_setpoint, s_clean, r.s_hist, t);

        ControllerInputs in{s_recv, r.prev.v_g_meas, r.prev.q_g_meas};
        NodeTelemetry telem = plant_step(r.plant, in, nc.plant, r.rng);
        r.v_hist.record(telem.v_g_meas);
        r.i_hist.record(telem.i_g_meas);
        r.q_hist.record(telem.q_g_meas);
        telem.v_g_meas = apply_attack(spec, nc.id, Channel::v_meas, telem.v_g_meas, r.v_hist, t);
        telem.i_g_meas = apply_attack(spec, nc.id, Channel::i_meas, telem.i_g_meas, r.i_hist, t);
        telem.q_g_meas = apply_attack(spec, nc.id, Channel::q_meas, telem.q_g_meas, r.q_hist, t);
        r.prev = telem;

        if (!r.twin_failed) {
          try {
            r.twin.step(s_clean);
            if (r.twin.step_index() != r.plant.step)
              throw SimulationError("plant and twin stepped out of lockstep", k);
          } catch (const TwinError&) {
            r.twin_failed = true;
          }
        }

        const auto [tau, local] = record_step(i, t, telem, s_recv);
        if (k % cfg.network.report_period_steps == 0)
          net.send({nc.id, k, tau, local}, k);
      }

      for (const TrustReport& rep : net.poll(k)) tracker.deliver(rep);
      if (k % cfg.network.report_period_steps == 0) {
        Evaluation ev = tracker.evaluate(k);
        res.verdict_by_step.push_back(format_verdicts(ev.verdicts));
        res.eval_steps.push_back(k);
        res.evals.push_back(std::move(ev));
      } else {
        res.verdict_by_step.push_back(res.verdict_by_step.back());
      }
    }
  } catch (const SimulationError& e) {
    res.failed_step = k;
    res.failure = e.what();
  }

  res.net_sent = net.sent_count();
  res.net_dropped = net.dropped_count();
  return res;
}

ScenarioScore score_scenario(const ScenarioResult& res, Detector det, int sustain_m) {
  ScenarioScore sc;
  sc.scenario_id = res.scenario_id;
  sc.kind = res.attack_kind;
  if (res.nodes.empty()) return sc;
  const long horizon = static_cast<long>(res.nodes.front().v_true.size()) - 1;

  long onset = -1;
  for (const auto& n : res.nodes)
    if (n.onset_step >= 0 && (onset < 0 || n.onset_step < onset)) onset = n.onset_step;
  sc.onset_step = onset;
  sc.attack_present = onset >= 0;

  std::optional<long> best_delay;
  for (const auto& n : res.nodes) {
    const std::vector<bool>& raw = det == Detector::snitch ? n.detect_raw : n.ann_raw;
    const auto anywhere = first_sustained_start(raw, sustain_m);
    if (!sc.attack_present) {
      if (anywhere) sc.false_alarm = true;
      continue;
    }
    if (anywhere && *anywhere < onset) sc.false_alarm = true;
    if (const auto d = detection_delay(raw, onset, sustain_m))
      if (!best_delay || *d < *best_delay) best_delay = d;
  }

  if (sc.attack_present) {
    sc.detected = best_delay.has_value();
    sc.delay_steps = best_delay;
    sc.censored_delay_steps = sc.detected ? *best_delay : horizon - onset;
    double rmse_sum = 0.0;
    long n_attacked = 0;
    for (const auto& n : res.nodes) {
      if (n.onset_step < 0) continue;
      ++n_attacked;
      // Undetected runs are scored on the final step only: the censoring
      // convention that charges the full divergence reached by scenario end.
      const long first = sc.detected ? std::min(onset + *best_delay, horizon) : horizon;
      rmse_sum += tracking_rmse(n.q_true, n.clean_q_ref,
                                static_cast<std::size_t>(first),
                                static_cast<std::size_t>(horizon) + 1);
    }
    if (n_attacked > 0) sc.rmse_pu = rmse_sum / static_cast<double>(n_attacked);
  }
  return sc;
}

ScenarioConfig make_suite_scenario(const SuiteSpec& spec, AttackKind kind, int index) {
  Rng rng(derive_seed(spec.base.master_seed, "variation", to_string(kind),
                      std::to_string(index)));
  ScenarioConfig cfg = spec.base;
  char id[64];
  std::snprintf(id, sizeof id, "%s_%02d", to_string(kind), index);
  cfg.scenario_id = id;

  const auto pick_node = [&]() -> std::string {
    const int i = rng.uniform_int(0, static_cast<int>(cfg.nodes.size()) - 1);
    return cfg.nodes[static_cast<std::size_t>(i)].id;
  };
  const auto draw = [&](const VariationRange& r) { return rng.uniform(r.lo, r.hi); };
  const auto sign = [&]() { return rng.uniform() < 0.5 ? -1.0 : 1.0; };

  AttackSpec a;
  a.kind = kind;
  switch (kind) {
    case AttackKind::none:
      break;
    case AttackKind::bias:
      a.t_start = draw(spec.onset_s);
      a.magnitude = draw(spec.bias_magnitude) * sign();
      a.node = pick_node();
      break;
    case AttackKind::ramp:
      a.t_start = draw(spec.onset_s);
      a.slope = draw(spec.ramp_slope) * sign();
      a.node = pick_node();
      break;
    case AttackKind::delay:
      a.t_start = draw(spec.onset_s);
      a.delay_s = draw(spec.delay_s);
      a.node = pick_node();
      break;
    case AttackKind::coordinated: {
      const double o1 = draw(spec.onset_s);
      const double stagger_max =
          0.5 * static_cast<double>(cfg.consensus.coincidence_window_steps) * cfg.dt;
      const double o2 = o1 + rng.uniform(0.0, stagger_max);
      AttackSpec c1, c2;
      c1.kind = c2.kind = AttackKind::bias;
      c1.t_start = o1;
      c1.magnitude = draw(spec.bias_magnitude) * sign();
      c2.t_start = o2;
      c2.magnitude = draw(spec.bias_magnitude) * sign();
      const int n = static_cast<int>(cfg.nodes.size());
      const int i1 = rng.uniform_int(0, n - 1);
      int i2 = rng.uniform_int(0, n - 2);
      if (i2 >= i1) ++i2;  // distinct pair, uniform
      c1.node = cfg.nodes[static_cast<std::size_t>(i1)].id;
      c2.node = cfg.nodes[static_cast<std::size_t>(i2)].id;
      a.components = {c1, c2};
      break;
    }
  }
  cfg.attack = a;
  cfg.validate();
  return cfg;
}

RunArtifacts run_calibrate(const ScenarioConfig& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  RunArtifacts art;
  art.out_dir = out_dir;
  const std::string hash = config_hash(cfg);
  const auto calib = calibrate_nodes(cfg);
  art.calibration_json = (fs::path(out_dir) / "calibration.json").string();
  write_calibration(art.calibration_json, cfg.nodes, calib, cfg.master_seed, hash);
  art.config_echo = (fs::path(out_dir) / "config_echo.json").string();
  write_scenario_echo(art.config_echo, cfg);
  return art;
}

RunArtifacts run_scenario(const ScenarioConfig& cfg, const std::string& out_dir,
                          OutputFormat format) {
  fs::create_directories(out_dir);
  RunArtifacts art;
  art.out_dir = out_dir;
  const std::string hash = config_hash(cfg);
  const auto wall0 = clock_type::now();

  const auto calib = calibrate_nodes(cfg);
  art.calibration_json = (fs::path(out_dir) / "calibration.json").string();
  write_calibration(art.calibration_json, cfg.nodes, calib, cfg.master_seed, hash);
  art.config_echo = (fs::path(out_dir) / "config_echo.json").string();
  write_scenario_echo(art.config_echo, cfg);

  std::optional<AnnModel> model;
  if (cfg.has_detector(Detector::ann)) {
    model = train_baseline(cfg);
    art.ann_model_json = (fs::path(out_dir) / "ann_model.json").string();
    save_ann_model(*model, art.ann_model_json, cfg.master_seed, hash);
  }

  ScenarioResult result = simulate_scenario(cfg, calib, model ? &*model : nullptr);
  art.trace_csv = (fs::path(out_dir) / "trace.csv").string();
  write_trace(art.trace_csv, result, cfg.master_seed, hash);

  if (result.failed_step >= 0)
    throw SimulationError("scenario " + cfg.scenario_id + " failed: " + result.failure);

  std::map<Detector, DetectorAggregate> aggs;
  for (Detector d : cfg.detectors) {
    DetectorAggregate& agg = aggs[d];
    agg.scores.push_back(score_scenario(result, d, cfg.twin.sustain_m));
    pool_roc(agg, result, d);
    finalize_aggregate(agg, cfg.total_steps());
    agg.report.compute_time_s =
        d == Detector::snitch ? result.timing.snitch_s : result.timing.ann_s;
  }

  if (format != OutputFormat::csv) {
    art.metrics_json = (fs::path(out_dir) / "metrics.json").string();
    write_metrics_json(art.metrics_json, aggs, cfg.master_seed, hash, 1, {});
  }
  if (format != OutputFormat::json) {
    art.metrics_csv = (fs::path(out_dir) / "metrics.csv").string();
    write_metrics_csv(art.metrics_csv, aggs, cfg.master_seed, hash);
  }
  art.timing_json = (fs::path(out_dir) / "timing.json").string();
  write_timing(art.timing_json, result.timing, seconds_since(wall0), cfg.master_seed,
               hash);
  return art;
}

RunArtifacts run_suite(const SuiteSpec& spec, const std::string& out_dir,
                       OutputFormat format, bool write_metrics, bool write_roc,
                       bool write_traces) {
  spec.validate();
  fs::create_directories(out_dir);
  if (write_traces) fs::create_directories(fs::path(out_dir) / "traces");
  RunArtifacts art;
  art.out_dir = out_dir;
  const std::string hash = suite_hash(spec);
  const ScenarioConfig& base = spec.base;
  const auto wall0 = clock_type::now();

  const auto calib = calibrate_nodes(base);
  art.calibration_json = (fs::path(out_dir) / "calibration.json").string();
  write_calibration(art.calibration_json, base.nodes, calib, base.master_seed, hash);
  art.config_echo = (fs::path(out_dir) / "suite_echo.json").string();
  write_suite_echo(art.config_echo, spec);

  std::optional<AnnModel> model;
  if (base.has_detector(Detector::ann)) {
    model = train_baseline(base);
    art.ann_model_json = (fs::path(out_dir) / "ann_model.json").string();
    save_ann_model(*model, art.ann_model_json, base.master_seed, hash);
  }

  std::map<Detector, DetectorAggregate> aggs;
  for (Detector d : base.detectors) aggs[d];
  std::vector<std::pair<std::string, std::string>> failures;
  DetectorTiming timing;
  std::size_t scenario_count = 0;

  for (AttackKind kind : spec.attack_types) {
    for (int idx = 0; idx < spec.scenarios_per_type; ++idx) {
      const ScenarioConfig cfg = make_suite_scenario(spec, kind, idx);
      ScenarioResult result =
          simulate_scenario(cfg, calib, model ? &*model : nullptr);
      ++scenario_count;
      if (write_traces) {
        const std::string path =
            (fs::path(out_dir) / "traces" / (cfg.scenario_id + ".csv")).string();
        write_trace(path, result, cfg.master_seed, config_hash(cfg));
        art.suite_trace_csvs.push_back(path);
      }
      if (result.failed_step >= 0) {
        failures.emplace_back(cfg.scenario_id, result.failure);
        continue;
      }
      timing.snitch_s += result.timing.snitch_s;
      timing.ann_s += result.timing.ann_s;
      for (Detector d : base.detectors) {
        DetectorAggregate& agg = aggs[d];
        agg.scores.push_back(score_scenario(result, d, cfg.twin.sustain_m));
        pool_roc(agg, result, d);
      }
    }
  }
  art.failed_scenarios = static_cast<int>(failures.size());
  if (!failures.empty() && failures.size() == scenario_count)
    throw SimulationError("every suite scenario failed; first error: " +
                          failures.front().second);

  for (auto& [d, agg] : aggs) {
    finalize_aggregate(agg, base.total_steps());
    agg.report.compute_time_s =
        d == Detector::snitch ? timing.snitch_s : timing.ann_s;
  }

  if (write_metrics) {
    if (format != OutputFormat::csv) {
      art.metrics_json = (fs::path(out_dir) / "metrics.json").string();
      write_metrics_json(art.metrics_json, aggs, base.master_seed, hash,
                         scenario_count, failures);
    }
    if (format != OutputFormat::json) {
      art.metrics_csv = (fs::path(out_dir) / "metrics.csv").string();
      write_metrics_csv(art.metrics_csv, aggs, base.master_seed, hash);
    }
  }
  if (write_roc) {
    for (const auto& [d, agg] : aggs) {
      if (!agg.roc) continue;  // single-class pooled labels: no curve exists
      const std::string path =
          (fs::path(out_dir) / (std::string("roc_") + to_string(d) + ".csv")).string();
      write_roc_csv(path, *agg.roc, base.master_seed, hash);
      art.roc_csvs.push_back(path);
    }
    if (format != OutputFormat::csv) {
      art.roc_summary_json = (fs::path(out_dir) / "roc_summary.json").string();
      write_roc_summary(art.roc_summary_json, aggs, base.master_seed, hash);
    }
  }
  art.timing_json = (fs::path(out_dir) / "timing.json").string();
  write_timing(art.timing_json, timing, seconds_since(wall0), base.master_seed, hash);
  return art;
}

}  // namespace snitchdt
