#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "npjive/errors.hpp"

namespace npjive {

// A many-arm experiment: K arms with exactly n units each, short-term
// observations S, long-term outcome Y, and optional fold labels V.
struct HistoricalDataset {
  int num_arms = 0;  // K
  int per_arm = 0;   // n, identical across arms
  Eigen::MatrixXd S;       // N x d
  Eigen::VectorXd Y;       // N
  std::vector<int> arm;    // N entries in 0..K-1
  std::vector<int> fold;   // N entries in 0..num_folds-1; empty when unassigned
  int num_folds = 0;       // 0 when folds are unassigned
  // When this dataset is a fold-restriction of a larger plan, the original
  // fold labels its rows came from. Fits propagate this into folds_seen.
  std::vector<int> source_folds;
  // Original arm labels, indexed by canonical arm id.
  std::vector<std::string> arm_labels;
  std::map<std::string, double> meta;

  int rows() const { return static_cast<int>(S.rows()); }
  int dim() const { return static_cast<int>(S.cols()); }
  bool has_folds() const { return num_folds > 0; }
  void validate() const;
};

struct NovelDataset {
  Eigen::MatrixXd S;  // n' x d

  int rows() const { return static_cast<int>(S.rows()); }
  int dim() const { return static_cast<int>(S.cols()); }
  void validate() const;
};

// Seeded per-arm permutations realizing an equal-cell fold split.
struct FoldPlan {
  int num_folds = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<int>> arm_order;  // per arm, a permutation of its row ids
};

FoldPlan make_fold_plan(const HistoricalDataset& data, int num_folds, std::uint64_t seed);

// Assigns fold labels within each arm from a seeded permutation: the first
// n/num_folds permuted units go to fold 0, and so on. When num_folds does not
// divide n, n mod num_folds units per arm are dropped (uniformly at random);
// the count lands in meta["dropped_rows"] for the caller to surface.
HistoricalDataset assign_folds(const HistoricalDataset& data, int num_folds,
                               std::uint64_t seed);

// Subset to the given fold labels, relabelled 0..F-1 in the given order.
// The original labels are recorded in source_folds.
HistoricalDataset restrict_to_folds(const HistoricalDataset& data,
                                    const std::vector<int>& folds);

std::vector<std::vector<int>> rows_by_arm(const HistoricalDataset& data);
std::vector<int> rows_in_fold(const HistoricalDataset& data, int fold);

// CSV, UTF-8, header row. Historical: arm,y,s_0..s_{d-1}. Novel: s_0..s_{d-1}.
HistoricalDataset load_historical_csv(const std::string& path);
NovelDataset load_novel_csv(const std::string& path);
void write_historical_csv(const HistoricalDataset& data, const std::string& path);
void write_novel_csv(const NovelDataset& data, const std::string& path);

}  // namespace npjive
