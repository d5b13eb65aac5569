#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "npjive/dataset.hpp"
#include "npjive/kernel.hpp"
#include "npjive/linalg.hpp"
#include "npjive/npjive.hpp"

namespace npjive {

// mu regularizes the exact-identification nuisance fit; tau ridges the gamma
// system (when unset: 1e-6 times the mean diagonal of the symmetrized C).
struct DebiasConfig {
  double mu = 1e-2;
  std::optional<double> tau;
  double nu = 1.0 / 10.0;
  int dictionary_size = 10;
  std::uint64_t seed = 0;
  double jitter = 1e-8;
  std::optional<Eigen::MatrixXd> centers;

  void validate() const;
};

// Arm-indexed debiasing weights q = sum_a gamma_a 1{.=a}, carrying the
// per-arm dictionary functions they were derived from. The mode flag selects
// how the object evaluates: as the arm-indicator weight gamma_a, or as the
// S-space expansion sum_a gamma_a q_a(s).
struct ArmWeightFunction {
  enum class Mode { kArmIndicator, kBasisExpansion };

  Eigen::VectorXd gamma;            // K
  std::vector<RkhsFunction> basis;  // K fitted q_a functions
  Mode mode = Mode::kArmIndicator;
  std::optional<std::vector<int>> folds_seen;

  int num_arms() const { return static_cast<int>(gamma.size()); }
  void validate() const;
  double weight_for_arm(int a) const;
  double value_at(const Eigen::RowVectorXd& s) const;
};

// Minimizer of the cross-fold debiasing risk
//   (1/2K) sum_a [fold-0 mean of xi](a) [fold-1 mean of xi](a)
//     - mean of xi over the novel sample + mu |xi|_{2,N}^2
// over the dictionary span. Centers pool historical and novel points.
RkhsFunction fit_debias_exact(const HistoricalDataset& data, const NovelDataset& novel,
                              const DebiasConfig& cfg);

// Per-arm basis fit: minimizes (1/N) sum_i h(S_i)^2 - (2/m) sum_{i in arm a,
// i != exclude} h(S_i); m = n without exclusion, n-1 with. Closed form
// (G_N + eps I)^{-1} phibar_a.
RkhsFunction fit_qa_star(const HistoricalDataset& data, int a, const DebiasConfig& cfg,
                         std::optional<int> exclude = std::nullopt);

// C matrix from explicit fits: diagonal (1/(Kn)) sum_{i in a} q_{a,-i}(S_i),
// off-diagonal (1/N) sum_i q_a(S_i) q_a'(S_i). loo_basis[a] must follow the
// row order of arm a. The two blocks deliberately keep their native scalings;
// symmetrization happens at solve time.
Eigen::MatrixXd assemble_C(const HistoricalDataset& data,
                           const std::vector<RkhsFunction>& basis,
                           const std::vector<std::vector<RkhsFunction>>& loo_basis);

// Full pipeline: fit all q_a, jackknife the diagonal through one shared
// factorization, solve (C_sym + tau I) gamma = novel means.
ArmWeightFunction fit_q_approx(const HistoricalDataset& data, const NovelDataset& novel,
                               const DebiasConfig& cfg);

// Shared state for the q_a solves on one dataset: features, second-moment
// matrix and its single factorization. All K full-sample fits and all K*n
// jackknife fits are triangular solves against this object.
struct QaWorkspace {
  KernelSpec kernel;
  Eigen::MatrixXd centers;
  Eigen::MatrixXd phi;           // N x L
  Eigen::MatrixXd second_moment; // L x L
  std::shared_ptr<const SpdSolver> solver;
  std::vector<std::vector<int>> by_arm;
  Eigen::MatrixXd arm_feature_mean;  // K x L

  Eigen::VectorXd qa_coeffs(const HistoricalDataset& data, int a,
                            std::optional<int> exclude = std::nullopt) const;
};

QaWorkspace make_qa_workspace(const HistoricalDataset& data, const NovelDataset* novel,
                              const DebiasConfig& cfg);

// Jackknife diagonal C_aa for every arm, evaluated through the shared
// factorization: one batched triangular solve for the whole dataset.
Eigen::VectorXd jackknife_diagonal_fast(const QaWorkspace& ws,
                                        const HistoricalDataset& data);

// Same quantity via independent per-(a, i) solves, refactorizing the
// regularized second-moment matrix each time. Reference path for testing the
// shared factorization and the baseline for its speedup.
Eigen::VectorXd jackknife_diagonal_naive(const QaWorkspace& ws,
                                         const HistoricalDataset& data);

}  // namespace npjive
