#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "npjive/dataset.hpp"
#include "npjive/kernel.hpp"

namespace npjive {

// Dictionary fit configuration. lambda is the Tikhonov level on the empirical
// L2 norm; jitter scales the diagonal loading applied to every linear system.
struct FitConfig {
  double lambda = 1e-2;
  double nu = 1.0 / 3.0;
  int dictionary_size = 5;
  std::uint64_t seed = 0;
  double jitter = 1e-8;
  // Accepted for config compatibility; no solver path consumes it.
  double w = 3.0;
  // When set, used verbatim instead of subsampling centers from the data.
  std::optional<Eigen::MatrixXd> centers;

  void validate() const;
};

// Caption defaults keyed by units-per-arm: (30, 1e-2, 1/3, 5),
// (100, 1e-2, 1/4, 7), (300, 1e-1, 1/10, 10), (3000, 1e-1, 1/10, 10).
// Picks the row nearest to n on a log scale.
FitConfig default_fit_config_for(int per_arm);

// Per-arm, per-fold sample means of the outcome and of the dictionary
// features; the building blocks of every arm-level empirical operator.
struct ArmMoments {
  Eigen::MatrixXd y_mean;                       // folds x K
  std::vector<Eigen::MatrixXd> feature_mean;    // per fold, K x L
};

// by_fold=false collapses everything into a single pseudo-fold over all rows.
ArmMoments arm_moments(const HistoricalDataset& data, const Eigen::MatrixXd& phi,
                       bool by_fold);

// Average squared arm-mean residual: (1/2K) sum_a (mean_{i in a}(Y_i - h(S_i)))^2.
double plug_in_risk(const RkhsFunction& h, const HistoricalDataset& data);

// Cross-fold analog: the product of the two fold means replaces the square,
// which removes the within-arm variance term from the expectation. Requires a
// 2-fold assignment; may be negative.
double crossfold_risk(const RkhsFunction& h, const HistoricalDataset& data);

// Minimizes plug_in_risk + lambda * |h|_{2,N}^2 over the dictionary span.
RkhsFunction fit_plugin(const HistoricalDataset& data, const FitConfig& cfg);

// Minimizes crossfold_risk + lambda * |h|_{2,N}^2 over the dictionary span.
// The symmetrized quadratic can be indefinite in finite samples; if lambda and
// jitter do not make it positive definite this raises NumericError.
RkhsFunction fit_npjive(const HistoricalDataset& data, const FitConfig& cfg);

// Confounded baseline: kernel ridge of Y on S over the pooled sample.
RkhsFunction fit_pooled_ridge(const HistoricalDataset& data, const FitConfig& cfg);

// Empirical L2 norm |h|_{2,N}^2 = (1/N) sum_i h(S_i)^2.
double empirical_sq_norm(const RkhsFunction& h, const HistoricalDataset& data);

namespace detail {

// Residual-level cores shared by the risk functions and the enumeration
// oracle: same arithmetic, residuals supplied by the caller.
double plug_in_risk_from_residuals(const Eigen::VectorXd& residuals,
                                   const HistoricalDataset& data);
double crossfold_risk_from_residuals(const Eigen::VectorXd& residuals,
                                     const HistoricalDataset& data);

// Dictionary selection: explicit override, else a seeded subsample of the
// pooled historical (plus novel, when supplied) points.
Eigen::MatrixXd resolve_centers(const HistoricalDataset& data, const NovelDataset* novel,
                                int dictionary_size, std::uint64_t seed,
                                const std::optional<Eigen::MatrixXd>& override_centers);

std::optional<std::vector<int>> fit_provenance(const HistoricalDataset& data);

}  // namespace detail

}  // namespace npjive
