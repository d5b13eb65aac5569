#pragma once

#include <optional>
#include <string>
#include <vector>

#include "npjive/dataset.hpp"
#include "npjive/debias.hpp"
#include "npjive/npjive.hpp"
#include "npjive/onestep.hpp"
#include "npjive/simulate.hpp"

namespace npjive {

// Estimator identifiers accepted by the harness.
inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> ids = {
      "plugin-md", "npjive", "npjive+onestep-exact", "npjive+onestep-approx",
      "pooled-regression-baseline"};
  return ids;
}

struct SingleFitResult {
  ThetaEstimate estimate;
  std::optional<std::vector<int>> h_folds;
  std::optional<std::vector<int>> debias_folds;
  int dropped_rows = 0;  // truncation applied while equalizing fold cells
};

// Runs one estimator on an unfolded dataset, assigning the fold structure it
// needs from fold_seed. Configs fall back to the per-n caption defaults when
// unset (debias mu additionally defaults to the fit lambda).
SingleFitResult run_estimator(const std::string& estimator,
                              const HistoricalDataset& data, const NovelDataset& novel,
                              const std::optional<FitConfig>& fit,
                              const std::optional<DebiasConfig>& debias,
                              std::uint64_t fold_seed);

struct SweepConfig {
  enum class Dgp { kContinuous, kExactId };

  Dgp dgp = Dgp::kContinuous;
  std::vector<int> arm_grid = {25};   // K values
  std::vector<int> n_grid = {30};     // units per arm
  int novel_rows = 500;
  int replications = 1;
  std::vector<std::string> estimators = {"npjive"};
  std::optional<FitConfig> fit;
  std::optional<DebiasConfig> debias;
  // Non-size parameters of the chosen DGP; sizes and seeds are overridden per
  // grid point and replication.
  ContinuousDgpParams continuous;
  ExactIdDgpParams exact_id;
  std::uint64_t seed = 1;
  int workers = 1;
  // Wall-clock numbers are inherently nondeterministic, so the runtime column
  // is zero unless explicitly enabled; identical seeds then produce
  // byte-identical CSVs at any worker count.
  bool timings = false;
  std::string out_csv;  // empty: in-memory only
  std::string out_svg;  // empty: no plot

  void validate() const;
};

struct McRow {
  std::string estimator;
  int num_arms = 0;
  int per_arm = 0;
  int novel_rows = 0;
  int replications = 0;
  double theta_true = 0.0;
  double bias = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
  double mse = 0.0;
  double mean_se = 0.0;
  double coverage95 = 0.0;
  double mean_runtime_ms = 0.0;
  int failures = 0;
};

struct McSummary {
  std::vector<McRow> rows;
  std::string to_csv() const;
};

// Simulate, fit every requested estimator, and aggregate per (estimator, K,
// n). Replications run on `workers` threads; per-replication streams are
// derived from (seed, K, n, rep), so scheduling cannot change the output.
// Failed replications are counted per row and excluded from the moments.
McSummary run_sweep(const SweepConfig& cfg);

// Log-log panels of MSE, squared bias, and variance against K, one polyline
// per estimator. Thin renderer over the summary rows; the CSV stays the
// contract.
std::string render_sweep_svg(const McSummary& summary);

}  // namespace npjive
