#include "npjive/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "npjive/rng.hpp"

namespace npjive {

namespace {

FitConfig fit_config_or_default(const std::optional<FitConfig>& fit, int per_arm) {
  return fit ? *fit : default_fit_config_for(per_arm);
}

DebiasConfig debias_config_or_default(const std::optional<DebiasConfig>& debias,
                                      const FitConfig& fit) {
  if (debias) return *debias;
  DebiasConfig cfg;
  cfg.mu = fit.lambda;
  return cfg;
}

bool is_known_estimator(const std::string& id) {
  const auto& ids = known_estimators();
  return std::find(ids.begin(), ids.end(), id) != ids.end();
}

void format_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

SingleFitResult run_estimator(const std::string& estimator,
                              const HistoricalDataset& data, const NovelDataset& novel,
                              const std::optional<FitConfig>& fit,
                              const std::optional<DebiasConfig>& debias,
                              std::uint64_t fold_seed) {
  if (!is_known_estimator(estimator))
    throw InputError("unknown estimator: " + estimator);
  const FitConfig fit_cfg = fit_config_or_default(fit, data.per_arm);
  const DebiasConfig debias_cfg = debias_config_or_default(debias, fit_cfg);

  SingleFitResult out;
  if (estimator == "plugin-md") {
    const RkhsFunction h = fit_plugin(data, fit_cfg);
    out.estimate = plug_in_functional(h, novel);
    out.h_folds = h.folds_seen;
    return out;
  }
  if (estimator == "pooled-regression-baseline") {
    const RkhsFunction h = fit_pooled_ridge(data, fit_cfg);
    out.estimate = plug_in_functional(h, novel);
    out.h_folds = h.folds_seen;
    return out;
  }
  const auto dropped = [](const HistoricalDataset& d) {
    const auto it = d.meta.find("dropped_rows");
    return it == d.meta.end() ? 0 : static_cast<int>(it->second);
  };

  if (estimator == "npjive") {
    const HistoricalDataset folded =
        data.num_folds == 2 ? data : assign_folds(data, 2, Rng::stream_seed(fold_seed, {2}));
    const RkhsFunction h = fit_npjive(folded, fit_cfg);
    out.estimate = plug_in_functional(h, novel);
    out.h_folds = h.folds_seen;
    out.dropped_rows = dropped(folded);
    return out;
  }

  // one-step variants
  const HistoricalDataset folded =
      data.num_folds == 4 ? data : assign_folds(data, 4, Rng::stream_seed(fold_seed, {4}));
  out.dropped_rows = dropped(folded);
  const HistoricalDataset train = restrict_to_folds(folded, {0, 1});
  const RkhsFunction h = fit_npjive(train, fit_cfg);
  const FoldPairing pairing = pair_folds(folded, Rng::stream_seed(fold_seed, {5}));
  DebiasFunction nuisance;
  if (estimator == "npjive+onestep-exact") {
    const RkhsFunction xi = fit_debias_exact(train, novel, debias_cfg);
    out.debias_folds = xi.folds_seen;
    nuisance = xi;
  } else {  // npjive+onestep-approx
    ArmWeightFunction q = fit_q_approx(train, novel, debias_cfg);
    out.debias_folds = q.folds_seen;
    nuisance = std::move(q);
  }
  out.estimate = one_step_theta(h, nuisance, folded, novel, pairing);
  out.h_folds = h.folds_seen;
  return out;
}

void SweepConfig::validate() const {
  if (replications < 1) throw InputError("sweep: replications must be >= 1");
  if (arm_grid.empty() || n_grid.empty()) throw InputError("sweep: empty grid");
  if (estimators.empty()) throw InputError("sweep: no estimators requested");
  for (const std::string& id : estimators)
    if (!is_known_estimator(id)) throw InputError("unknown estimator: " + id);
  if (novel_rows < 2) throw InputError("sweep: novel_rows must be >= 2");
  if (workers < 1) throw InputError("sweep: workers must be >= 1");
}

namespace {

struct RepOutcome {
  bool ok = false;
  double theta = 0.0;
  double se = 0.0;
  bool covered = false;
  double runtime_ms = 0.0;
};

struct GridTask {
  int num_arms = 0;
  int per_arm = 0;
  double theta_true = 0.0;
  // outcome slot per (replication, estimator)
  std::vector<std::vector<RepOutcome>> outcomes;
};

SimulatedExperiment simulate_for(const SweepConfig& cfg, int num_arms, int per_arm,
                                 std::uint64_t rep_seed) {
  if (cfg.dgp == SweepConfig::Dgp::kContinuous) {
    ContinuousDgpParams params = cfg.continuous;
    params.num_arms = num_arms;
    params.per_arm = per_arm;
    params.novel_rows = cfg.novel_rows;
    params.seed = rep_seed;
    return dgp_continuous(params);
  }
  ExactIdDgpParams params = cfg.exact_id;
  params.num_arms = num_arms;
  params.per_arm = per_arm;
  params.novel_rows = cfg.novel_rows;
  params.seed = rep_seed;
  return dgp_exact_id(params);
}

void run_one_replication(const SweepConfig& cfg, GridTask& task, int rep) {
  const std::uint64_t rep_seed =
      Rng::stream_seed(cfg.seed, {static_cast<std::uint64_t>(task.num_arms),
                                  static_cast<std::uint64_t>(task.per_arm),
                                  static_cast<std::uint64_t>(rep), 0x73696dULL});
  const std::uint64_t fold_seed =
      Rng::stream_seed(cfg.seed, {static_cast<std::uint64_t>(task.num_arms),
                                  static_cast<std::uint64_t>(task.per_arm),
                                  static_cast<std::uint64_t>(rep), 0x666c64ULL});
  SimulatedExperiment experiment;
  bool simulated = false;
  try {
    experiment = simulate_for(cfg, task.num_arms, task.per_arm, rep_seed);
    simulated = true;
  } catch (const std::exception&) {
    simulated = false;
  }
  for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
    RepOutcome& slot = task.outcomes[static_cast<std::size_t>(rep)][e];
    if (!simulated) continue;
    const auto start = std::chrono::steady_clock::now();
    try {
      const SingleFitResult result =
          run_estimator(cfg.estimators[e], experiment.historical, experiment.novel,
                        cfg.fit, cfg.debias, fold_seed);
      slot.ok = true;
      slot.theta = result.estimate.theta;
      slot.se = result.estimate.se;
      slot.covered = experiment.theta_true >= result.estimate.ci_low &&
                     experiment.theta_true <= result.estimate.ci_high;
    } catch (const std::exception&) {
      slot.ok = false;
    }
    if (cfg.timings) {
      const auto elapsed = std::chrono::steady_clock::now() - start;
      slot.runtime_ms =
          std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed)
              .count();
    }
  }
}

}  // namespace

McSummary run_sweep(const SweepConfig& cfg) {
  cfg.validate();
  McSummary summary;

  for (const int num_arms : cfg.arm_grid) {
    for (const int per_arm : cfg.n_grid) {
      GridTask task;
      task.num_arms = num_arms;
      task.per_arm = per_arm;
      task.outcomes.assign(
          static_cast<std::size_t>(cfg.replications),
          std::vector<RepOutcome>(cfg.estimators.size()));
      {
        // theta_true depends only on the novel-arm parameters
        const auto params_theta = [&]() -> double {
          if (cfg.dgp == SweepConfig::Dgp::kContinuous) {
            ContinuousDgpParams p = cfg.continuous;
            p.num_arms = num_arms;
            p.per_arm = per_arm;
            p.novel_rows = cfg.novel_rows;
            return theta_star_quadrature(p);
          }
          ExactIdDgpParams p = cfg.exact_id;
          p.num_arms = num_arms;
          p.per_arm = per_arm;
          p.novel_rows = cfg.novel_rows;
          return theta_star_quadrature(p);
        };
        task.theta_true = params_theta();
      }

      if (cfg.workers == 1) {
        for (int rep = 0; rep < cfg.replications; ++rep)
          run_one_replication(cfg, task, rep);
      } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        const int workers = std::min(cfg.workers, cfg.replications);
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
          pool.emplace_back([&]() {
            for (;;) {
              const int rep = next.fetch_add(1);
              if (rep >= cfg.replications) return;
              run_one_replication(cfg, task, rep);
            }
          });
        }
        for (std::thread& t : pool) t.join();
      }

      // Reduce in replication order: scheduling cannot change the sums.
      for (std::size_t e = 0; e < cfg.estimators.size(); ++e) {
        McRow row;
        row.estimator = cfg.estimators[e];
        row.num_arms = num_arms;
        row.per_arm = per_arm;
        row.novel_rows = cfg.novel_rows;
        row.replications = cfg.replications;
        row.theta_true = task.theta_true;
        double sum_theta = 0.0, sum_se = 0.0, sum_rt = 0.0;
        int good = 0, covered = 0;
        for (int rep = 0; rep < cfg.replications; ++rep) {
          const RepOutcome& slot = task.outcomes[static_cast<std::size_t>(rep)][e];
          if (!slot.ok) continue;
          ++good;
          sum_theta += slot.theta;
          sum_se += slot.se;
          sum_rt += slot.runtime_ms;
          covered += slot.covered ? 1 : 0;
        }
        row.failures = cfg.replications - good;
        if (good > 0) {
          const double mean_theta = sum_theta / good;
          double ss = 0.0;
          for (int rep = 0; rep < cfg.replications; ++rep) {
            const RepOutcome& slot = task.outcomes[static_cast<std::size_t>(rep)][e];
            if (!slot.ok) continue;
            const double d = slot.theta - mean_theta;
            ss += d * d;
          }
          row.bias = mean_theta - task.theta_true;
          row.bias_sq = row.bias * row.bias;
          // population-style variance so that mse == bias^2 + variance exactly
          row.variance = ss / good;
          row.mse = row.bias_sq + row.variance;
          row.mean_se = sum_se / good;
          row.coverage95 = static_cast<double>(covered) / good;
          row.mean_runtime_ms = sum_rt / good;
        }
        summary.rows.push_back(std::move(row));
      }
    }
  }

  if (!cfg.out_csv.empty()) {
    std::ofstream out(cfg.out_csv);
    if (!out) throw InputError("cannot write file: " + cfg.out_csv);
    out << summary.to_csv();
  }
  if (!cfg.out_svg.empty()) {
    std::ofstream out(cfg.out_svg);
    if (!out) throw InputError("cannot write file: " + cfg.out_svg);
    out << render_sweep_svg(summary);
  }
  return summary;
}

std::string McSummary::to_csv() const {
  std::string csv =
      "estimator,K,n,n_new,R,theta_true,bias,bias_sq,variance,mse,mean_se,"
      "coverage95,mean_runtime_ms,failures\n";
  for (const McRow& row : rows) {
    csv += row.estimator;
    csv += "," + std::to_string(row.num_arms);
    csv += "," + std::to_string(row.per_arm);
    csv += "," + std::to_string(row.novel_rows);
    csv += "," + std::to_string(row.replications);
    for (const double v : {row.theta_true, row.bias, row.bias_sq, row.variance, row.mse,
                           row.mean_se, row.coverage95, row.mean_runtime_ms}) {
      csv += ",";
      format_double(csv, v);
    }
    csv += "," + std::to_string(row.failures);
    csv += "\n";
  }
  return csv;
}

}  // namespace npjive
