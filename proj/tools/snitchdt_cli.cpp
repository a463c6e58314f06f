#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "snitchdt/errors.hpp"
#include "snitchdt/harness.hpp"

namespace {

snitchdt::OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return snitchdt::OutputFormat::csv;
  if (s == "json") return snitchdt::OutputFormat::json;
  return snitchdt::OutputFormat::both;
}

void print_artifacts(const snitchdt::RunArtifacts& art) {
  std::printf("output directory: %s\n", art.out_dir.c_str());
  if (!art.trace_csv.empty()) std::printf("trace: %s\n", art.trace_csv.c_str());
  if (!art.suite_trace_csvs.empty())
    std::printf("traces: %zu files under %s/traces\n", art.suite_trace_csvs.size(),
                art.out_dir.c_str());
  if (!art.metrics_json.empty()) std::printf("metrics: %s\n", art.metrics_json.c_str());
  if (!art.metrics_csv.empty()) std::printf("metrics: %s\n", art.metrics_csv.c_str());
  for (const auto& p : art.roc_csvs) std::printf("roc: %s\n", p.c_str());
  if (!art.roc_summary_json.empty())
    std::printf("roc summary: %s\n", art.roc_summary_json.c_str());
  if (!art.calibration_json.empty())
    std::printf("calibration: %s\n", art.calibration_json.c_str());
  if (!art.ann_model_json.empty())
    std::printf("model: %s\n", art.ann_model_json.c_str());
  if (art.failed_scenarios > 0)
    std::printf("failed scenarios: %d (see metrics failures list)\n",
                art.failed_scenarios);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic multi-node twin-replica anomaly detection simulator"};
  app.require_subcommand(1);

  std::string config_path, suite_path, out_dir;
  std::string format_str = "both";
  std::uint64_t seed = 0;
  const auto format_check = CLI::IsMember({"csv", "json", "both"});

  CLI::App* cal = app.add_subcommand(
      "calibrate", "derive per-node residual thresholds from attack-free runs");
  cal->add_option("--config", config_path, "scenario config JSON")->required();
  cal->add_option("--out", out_dir, "output directory")->required();

  CLI::App* run = app.add_subcommand(
      "run", "simulate one scenario; write trace, metrics, and echoes");
  run->add_option("--config", config_path, "scenario config JSON")->required();
  CLI::Option* run_seed = run->add_option("--seed", seed, "override the master seed");
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--format", format_str, "metric output format")->check(format_check);

  CLI::App* suite = app.add_subcommand(
      "suite", "run the scenario suite; write per-scenario traces and aggregates");
  suite->add_option("--suite", suite_path, "suite spec JSON")->required();
  CLI::Option* suite_seed =
      suite->add_option("--seed", seed, "override the master seed");
  suite->add_option("--out", out_dir, "output directory")->required();
  suite->add_option("--format", format_str, "metric output format")->check(format_check);

  CLI::App* roc = app.add_subcommand(
      "roc", "run the suite and emit pooled detector ROC curves only");
  roc->add_option("--suite", suite_path, "suite spec JSON")->required();
  roc->add_option("--out", out_dir, "output directory")->required();
  roc->add_option("--format", format_str, "metric output format")->check(format_check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const snitchdt::OutputFormat format = parse_format(format_str);
    if (cal->parsed()) {
      snitchdt::ScenarioConfig cfg = snitchdt::load_scenario_config(config_path);
      print_artifacts(snitchdt::run_calibrate(cfg, out_dir));
    } else if (run->parsed()) {
      snitchdt::ScenarioConfig cfg = snitchdt::load_scenario_config(config_path);
      if (run_seed->count() > 0) cfg.master_seed = seed;
      print_artifacts(snitchdt::run_scenario(cfg, out_dir, format));
    } else if (suite->parsed()) {
      snitchdt::SuiteSpec spec = snitchdt::load_suite_spec(suite_path);
      if (suite_seed->count() > 0) spec.base.master_seed = seed;
      print_artifacts(snitchdt::run_suite(spec, out_dir, format));
    } else if (roc->parsed()) {
      snitchdt::SuiteSpec spec = snitchdt::load_suite_spec(suite_path);
      snitchdt::RunArtifacts art = snitchdt::run_suite(
          spec, out_dir, format, /*write_metrics=*/false, /*write_roc=*/true,
          /*write_traces=*/false);
      if (art.roc_csvs.empty())
        throw snitchdt::ConfigError(
            "roc: the suite produced single-class step labels; include at least "
            "one attack scenario type");
      print_artifacts(art);
    }
  } catch (const snitchdt::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const snitchdt::TrainingError& e) {
    std::fprintf(stderr, "training error: %s\n", e.what());
    return 2;
  } catch (const snitchdt::SimulationError& e) {
    std::fprintf(stderr, "simulation error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
