#pragma once

#include <string>

#include "npjive/dataset.hpp"
#include "npjive/rng.hpp"

namespace npjive::testing {

// Small random experiment with well-spread S values; arms get distinct
// location shifts so arm means carry signal.
inline HistoricalDataset random_dataset(Rng& rng, int num_arms, int per_arm,
                                        double noise = 0.5) {
  HistoricalDataset data;
  data.num_arms = num_arms;
  data.per_arm = per_arm;
  const int rows = num_arms * per_arm;
  data.S.resize(rows, 1);
  data.Y.resize(rows);
  for (int a = 0; a < num_arms; ++a) {
    data.arm_labels.push_back(std::to_string(a));
    const double shift = rng.uniform(-1.5, 1.5);
    for (int u = 0; u < per_arm; ++u) {
      const int i = a * per_arm + u;
      data.S(i, 0) = shift + rng.uniform(-0.75, 0.75);
      data.Y(i) = std::sin(2.0 * data.S(i, 0)) + noise * rng.normal();
      data.arm.push_back(a);
    }
  }
  return data;
}

inline NovelDataset random_novel(Rng& rng, int rows, double lo = -1.0, double hi = 1.0) {
  NovelDataset novel;
  novel.S.resize(rows, 1);
  for (int i = 0; i < rows; ++i) novel.S(i, 0) = rng.uniform(lo, hi);
  return novel;
}

}  // namespace npjive::testing
