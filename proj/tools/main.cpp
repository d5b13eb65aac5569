// Command-line harness: dataset simulation, single fits, Monte Carlo sweeps,
// and the exact-world verification battery.
//
//   npjive simulate --config dgp.json --out data/run1
//   npjive fit --estimator npjive+onestep-exact --historical h.csv --novel n.csv
//   npjive sweep --config sweep.json --out sweep.csv
//   npjive oracle-check --seed 7
//
// Exit codes: 0 success, 2 validation error, 3 numerical error.

#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "config_json.hpp"
#include "npjive/errors.hpp"
#include "npjive/oracle.hpp"
#include "npjive/rng.hpp"

namespace {

using npjive::config::json;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = 1;
};

json config_or_empty(const CommonArgs& args) {
  if (args.config_path.empty()) return json::object();
  return npjive::config::load_json_file(args.config_path);
}

int cmd_simulate(const CommonArgs& args, const std::string& dgp) {
  json cfg = config_or_empty(args);
  if (args.seed) cfg["seed"] = *args.seed;
  npjive::SimulatedExperiment experiment;
  if (dgp == "continuous") {
    experiment = npjive::dgp_continuous(npjive::config::parse_continuous_params(cfg));
  } else if (dgp == "exact-id") {
    experiment = npjive::dgp_exact_id(npjive::config::parse_exact_id_params(cfg));
  } else {
    throw npjive::InputError("simulate: dgp must be 'continuous' or 'exact-id'");
  }
  if (args.out.empty()) throw npjive::InputError("simulate: --out prefix is required");
  const std::string historical_path = args.out + "_historical.csv";
  const std::string novel_path = args.out + "_novel.csv";
  npjive::write_historical_csv(experiment.historical, historical_path);
  npjive::write_novel_csv(experiment.novel, novel_path);
  const json report{{"theta_true", experiment.theta_true},
                    {"K", experiment.historical.num_arms},
                    {"n", experiment.historical.per_arm},
                    {"n_new", experiment.novel.rows()},
                    {"historical", historical_path},
                    {"novel", novel_path}};
  std::cout << report.dump() << "\n";
  return 0;
}

struct FitArgs {
  std::string estimator;
  std::string historical_path;
  std::string novel_path;
  std::string dgp;
};

int cmd_fit(const CommonArgs& args, const FitArgs& fit_args) {
  json cfg = config_or_empty(args);
  std::optional<npjive::FitConfig> fit_cfg;
  std::optional<npjive::DebiasConfig> debias_cfg;
  if (cfg.contains("fit")) fit_cfg = npjive::config::parse_fit_config(cfg.at("fit"));
  if (cfg.contains("debias"))
    debias_cfg = npjive::config::parse_debias_config(cfg.at("debias"));

  npjive::HistoricalDataset data;
  npjive::NovelDataset novel;
  std::optional<double> theta_true;
  if (!fit_args.dgp.empty()) {
    json dgp_params = cfg.value("dgp_params", json::object());
    if (args.seed) dgp_params["seed"] = *args.seed;
    npjive::SimulatedExperiment experiment;
    if (fit_args.dgp == "continuous")
      experiment = npjive::dgp_continuous(
          npjive::config::parse_continuous_params(dgp_params));
    else if (fit_args.dgp == "exact-id")
      experiment =
          npjive::dgp_exact_id(npjive::config::parse_exact_id_params(dgp_params));
    else
      throw npjive::InputError("fit: dgp must be 'continuous' or 'exact-id'");
    data = std::move(experiment.historical);
    novel = std::move(experiment.novel);
    theta_true = experiment.theta_true;
  } else {
    if (fit_args.historical_path.empty() || fit_args.novel_path.empty())
      throw npjive::InputError(
          "fit: provide --historical and --novel CSV paths, or --dgp");
    data = npjive::load_historical_csv(fit_args.historical_path);
    novel = npjive::load_novel_csv(fit_args.novel_path);
  }

  const std::uint64_t fold_seed =
      args.seed.value_or(cfg.value("seed", static_cast<std::uint64_t>(0)));
  const npjive::SingleFitResult result = npjive::run_estimator(
      fit_args.estimator, data, novel, fit_cfg, debias_cfg, fold_seed);
  if (result.dropped_rows > 0)
    std::fprintf(stderr, "warning: dropped %d rows to equalize fold cells\n",
                 result.dropped_rows);

  json line = npjive::config::estimate_to_json(result.estimate);
  line["estimator"] = fit_args.estimator;
  line["K"] = data.num_arms;
  line["n"] = data.per_arm;
  line["n_new"] = novel.rows();
  if (theta_true) line["theta_true"] = *theta_true;
  json provenance = json::object();
  if (result.h_folds) provenance["h_folds"] = *result.h_folds;
  if (result.debias_folds) provenance["debias_folds"] = *result.debias_folds;
  line["provenance"] = provenance;
  std::cout << line.dump() << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  json cfg = config_or_empty(args);
  if (args.seed) cfg["seed"] = *args.seed;
  if (!args.out.empty()) cfg["out"] = args.out;
  if (args.workers > 1) cfg["workers"] = args.workers;
  const npjive::SweepConfig sweep_cfg = npjive::config::parse_sweep_config(cfg);
  const npjive::McSummary summary = npjive::run_sweep(sweep_cfg);
  if (sweep_cfg.out_csv.empty()) std::cout << summary.to_csv();
  return 0;
}

int cmd_oracle_check(const CommonArgs& args) {
  npjive::OracleBatteryConfig cfg;
  if (args.seed) cfg.seed = *args.seed;
  const npjive::OracleBatteryReport report = npjive::run_oracle_battery(cfg);
  for (const auto& line : report.lines)
    std::printf("%s %s: %s\n", line.pass ? "PASS" : "FAIL", line.name.c_str(),
                line.detail.c_str());
  if (!report.all_pass()) throw npjive::NumericError("oracle battery failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonparametric jackknife IV estimation and Monte Carlo harness"};
  app.require_subcommand(1);

  CommonArgs common;
  std::string dgp;
  FitArgs fit_args;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config file");
    sub->add_option("--seed", common.seed, "master seed override");
    sub->add_option("--out", common.out, "output path");
    sub->add_option("--workers", common.workers, "worker thread count");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "generate datasets from a DGP");
  add_common(simulate);
  simulate->add_option("--dgp", dgp, "continuous | exact-id")->required();

  CLI::App* fit = app.add_subcommand("fit", "one estimate as a JSON line");
  add_common(fit);
  fit->add_option("--estimator", fit_args.estimator, "estimator id")->required();
  fit->add_option("--historical", fit_args.historical_path, "historical CSV");
  fit->add_option("--novel", fit_args.novel_path, "novel CSV");
  fit->add_option("--dgp", fit_args.dgp, "simulate instead of loading CSVs");

  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep to CSV");
  add_common(sweep);

  CLI::App* oracle = app.add_subcommand("oracle-check", "exact-world verification");
  add_common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common, dgp);
    if (fit->parsed()) return cmd_fit(common, fit_args);
    if (sweep->parsed()) return cmd_sweep(common);
    if (oracle->parsed()) return cmd_oracle_check(common);
  } catch (const npjive::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const npjive::NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
