#pragma once

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "npjive/dataset.hpp"
#include "npjive/debias.hpp"
#include "npjive/kernel.hpp"

namespace npjive {

// Point estimate with its Wald machinery. se^2 = sigma1_sq/n' + sigma2_sq/(N/4)
// and ci = theta +- 1.96 se; n_eff = min(n', N/4).
struct ThetaEstimate {
  double theta = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double sigma1_sq = 0.0;
  double sigma2_sq = 0.0;
  int n_eff = 0;
};

// One-to-one, arm-respecting map from fold-2 rows to fold-3 rows.
struct FoldPairing {
  std::vector<std::pair<int, int>> pairs;  // (fold-2 row, fold-3 row)
};

// Seeded random bijection between the fold-2 and fold-3 cells of each arm.
FoldPairing pair_folds(const HistoricalDataset& data, std::uint64_t seed);

using DebiasFunction = std::variant<RkhsFunction, ArmWeightFunction>;

// theta = mean of h over the novel sample
//   + (4/N) sum_{i in fold 2} debias_i (Y_{j(i)} - h(S_{j(i)}))
// where debias_i is xi(S_i) for a function-valued nuisance and gamma_{A_i}
// for arm-indexed weights. Both nuisances must have been fit on folds {0,1}
// only; provenance tags are checked when present.
ThetaEstimate one_step_theta(const RkhsFunction& h, const DebiasFunction& debias,
                             const HistoricalDataset& data, const NovelDataset& novel,
                             const FoldPairing& pairing);

// (sigma1_sq, sigma2_sq): sample variance of h over the novel points and of
// the realized correction terms over fold-2 pairs.
std::pair<double, double> variance_components(const RkhsFunction& h,
                                              const DebiasFunction& debias,
                                              const HistoricalDataset& data,
                                              const NovelDataset& novel,
                                              const FoldPairing& pairing);

// Uncorrected functional: mean of h over the novel sample, se from the
// sigma1 component alone.
ThetaEstimate plug_in_functional(const RkhsFunction& h, const NovelDataset& novel);

}  // namespace npjive
