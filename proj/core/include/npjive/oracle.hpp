#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npjive/dataset.hpp"
#include "npjive/rng.hpp"

namespace npjive {

// A finite-support environment where every population quantity is an exact
// matrix computation. Hypotheses are plain vectors over the support (the full
// M-dimensional function space, so projections are identities). Outcomes
// follow a two-point law per support point: Y = outcome_mean[m] +-
// outcome_spread[m] with probability 1/2 each.
struct DiscreteWorld {
  Eigen::MatrixXd cond_pmf;      // K x M, row a = law of S given arm a
  Eigen::VectorXd novel_pmf;     // M, law of S in the novel arm
  Eigen::VectorXd outcome_mean;  // M, E[Y | S = s_m]
  Eigen::VectorXd outcome_spread;  // M, conditional residual scale
  Eigen::VectorXd support;       // M point values (used when materializing data)

  int num_arms() const { return static_cast<int>(cond_pmf.rows()); }
  int support_size() const { return static_cast<int>(cond_pmf.cols()); }
  void validate() const;

  // Pooled law (1/K) sum_a p(.|a).
  Eigen::VectorXd pooled_pmf() const;
  // Arm-conditional means of an h vector: entry a = sum_m p(m|a) h_m.
  Eigen::VectorXd arm_means(const Eigen::VectorXd& h) const;
  // Norm over arm functions: |g|^2 = (1/K) sum_a g(a)^2.
  double arm_norm(const Eigen::VectorXd& g) const;
  // Norm over support functions under the pooled law.
  double pooled_norm(const Eigen::VectorXd& h) const;
};

// The conditional-mean operator as a matrix: T[a, m] = p(s_m | a).
Eigen::MatrixXd exact_operator(const DiscreteWorld& world);

struct RieszNuisances {
  Eigen::VectorXd rho;    // novel / pooled density ratio
  Eigen::VectorXd alpha;  // Riesz representer (= rho over the full space)
  bool identified = false;
  double id_residual = 0.0;  // least-squares range residual behind the flag
  std::optional<Eigen::VectorXd> xi;  // min-norm solution of T*T xi = alpha
  Eigen::VectorXd h_dagger;  // min-pooled-norm solution of T h = E[Y|A]
};

RieszNuisances riesz_and_nuisances(const DiscreteWorld& world);

// rank(T') == rank(T'T) at relative tolerance 1e-10; holds for any matrix.
bool rank_equivalence(const Eigen::MatrixXd& t, double rel_tol = 1e-10);
bool check_id_equiv(const DiscreteWorld& world);

// Exact expectations of the two empirical risks for a fixed h, enumerated
// over all joint outcomes of a K-arm sample with two folds of n_per_fold
// units per arm. Guard: K * (2M)^(2 n_per_fold) atoms and at most 1e7.
struct CrossfoldExpectation {
  double crossfold = 0.0;
  double plugin = 0.0;
};

CrossfoldExpectation enumerate_crossfold_expectation(const DiscreteWorld& world,
                                                     const Eigen::VectorXd& h,
                                                     int n_per_fold);

// Population risk (1/2K) sum_a (E[h - Y | A=a])^2.
double population_risk(const DiscreteWorld& world, const Eigen::VectorXd& h);

// Exact within-arm variance bias of the plug-in risk:
// (1/2K) sum_a Var(Y - h | A = a) / n_units.
double plugin_bias_formula(const DiscreteWorld& world, const Eigen::VectorXd& h,
                           int n_units);

// theta for the designated structural truth; requires identification for the
// functional to be well defined.
double theta_star(const DiscreteWorld& world);

// Exact |E[psi(h, xi)] - theta*| against the weak-norm product bound,
// psi(h, xi) = h(S_new) + xi(S')(Y - h(S)) with S' an independent within-arm
// copy. Requires an identified world.
struct MixedBiasCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

MixedBiasCheck mixed_bias_check(const DiscreteWorld& world, const Eigen::VectorXd& h,
                                const Eigen::VectorXd& xi);

// psi(h, q) = h(S_new) + q(A)(Y - h(S)) evaluated at the minimum-norm solution
// h_dagger and the population gamma solve for q; the gap must be bounded by
// eps_k (null-space mass of the structural truth) times delta_k (range
// residual of the representer). Valid on any world.
struct PsiInequalityCheck {
  double lhs = 0.0;
  double eps_k = 0.0;
  double delta_k = 0.0;
  Eigen::VectorXd gamma;
};

PsiInequalityCheck psi_inequality_check(const DiscreteWorld& world);

// Materialize samples from a world (S takes exact support values).
HistoricalDataset sample_historical(const DiscreteWorld& world, int per_arm,
                                    std::uint64_t seed);
NovelDataset sample_novel(const DiscreteWorld& world, int rows, std::uint64_t seed);

// Seeded world generators for verification batteries.
DiscreteWorld random_world(Rng& rng, int num_arms, int support_size,
                           bool allow_rank_deficient = true);
DiscreteWorld random_identified_world(Rng& rng, int num_arms, int support_size);

// Verification battery behind the oracle-check subcommand: exact cross-fold
// unbiasedness, the plug-in bias formula, rank equivalence, the mixed-bias
// inequality, and the psi inequality, on seeded random worlds.
struct OracleBatteryConfig {
  int unbiasedness_worlds = 50;
  int unbiasedness_hypotheses = 20;
  int rank_worlds = 1000;
  int mixed_bias_worlds = 100;
  int mixed_bias_pairs = 100;
  int psi_worlds = 50;
  std::uint64_t seed = 20240901;
};

struct OracleBatteryReport {
  struct Line {
    std::string name;
    bool pass = false;
    std::string detail;
  };
  std::vector<Line> lines;
  bool all_pass() const;
};

OracleBatteryReport run_oracle_battery(const OracleBatteryConfig& cfg);

}  // namespace npjive
