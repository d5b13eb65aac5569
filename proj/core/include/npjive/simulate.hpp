#pragma once

#include <cstdint>
#include <vector>

#include "npjive/dataset.hpp"

namespace npjive {

// True structural function of both simulated worlds:
// s + sin(s) + 1{s > 0.25} (strict inequality at the jump).
double structural_h(double s);

// Continuous world: arm effects Gamma_a ~ N(0, sigma_gamma^2); within arm a,
// S = Uniform(Gamma_a - 1/2, Gamma_a + 1/2) + U with confounder U ~ N(0,
// sigma_u^2) and Y = structural_h(S) - U. The novel arm replaces Gamma_a with
// the fixed gamma_new.
struct ContinuousDgpParams {
  int num_arms = 25;   // K
  int per_arm = 30;    // n
  int novel_rows = 500;
  double sigma_gamma = 2.0;
  double gamma_new = 1.0;
  double sigma_u = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Exactly identified world: per arm, first-stage weights mu_a over 5 support
// points drawn from a Dirichlet; S = support[Multinomial(mu_a)] + U with
// U ~ Uniform(-halfwidth, halfwidth); Y = structural_h(S) - outcome_scale * U.
// The novel arm uses the fixed weight vector mu_new. An all-infinite
// concentration vector is the deterministic limit: every arm gets uniform
// weights.
struct ExactIdDgpParams {
  int num_arms = 25;
  int per_arm = 100;
  int novel_rows = 500;
  std::vector<double> dirichlet_concentration = {10, 10, 10, 10, 10};
  std::vector<double> support = {-0.6, -0.2, 0.2, 0.6, 1.0};
  double confounder_halfwidth = 0.2;
  double outcome_confounder_scale = 10.0;
  std::vector<double> mu_new = {0.0, 0.1, 0.2, 0.3, 0.4};
  std::uint64_t seed = 0;

  void validate() const;
};

struct SimulatedExperiment {
  HistoricalDataset historical;
  NovelDataset novel;
  double theta_true = 0.0;
};

// Deterministic per seed; each (seed, arm) pair gets its own stream so
// parallel replications reproduce bit-for-bit regardless of scheduling.
SimulatedExperiment dgp_continuous(const ContinuousDgpParams& params);
SimulatedExperiment dgp_exact_id(const ExactIdDgpParams& params);

// E[structural_h(S_new)] by adaptive quadrature over the novel-arm law,
// absolute tolerance 1e-8. The continuous case integrates against the
// uniform-normal convolution density; the exact-id case is a finite mixture
// of uniform-window integrals.
double theta_star_quadrature(const ContinuousDgpParams& params);
double theta_star_quadrature(const ExactIdDgpParams& params);

}  // namespace npjive
