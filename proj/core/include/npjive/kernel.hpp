#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "npjive/errors.hpp"

namespace npjive {

// Gaussian kernel k(s, t) = exp(-|s - t|^2 / (2 nu^2)). Unit diagonal,
// values in (0, 1].
struct KernelSpec {
  double nu = 1.0;  // bandwidth
  int dim = 1;

  void validate() const {
    if (!(nu > 0.0)) throw InputError("KernelSpec: bandwidth nu must be positive");
    if (dim < 1) throw InputError("KernelSpec: dimension must be >= 1");
  }
};

// A dictionary function h(s) = sum_j coeffs[j] * k(s, centers.row(j)).
// Fitted objects carry the historical folds their training data came from so
// downstream estimators can assert out-of-fold evaluation.
struct RkhsFunction {
  KernelSpec kernel;
  Eigen::MatrixXd centers;  // L x d
  Eigen::VectorXd coeffs;   // L
  std::optional<std::vector<int>> folds_seen;

  int size() const { return static_cast<int>(centers.rows()); }
  void validate() const;
  double value(const Eigen::RowVectorXd& s) const;
};

// Returns a zero function over a single far-away placeholder center.
RkhsFunction zero_function(const KernelSpec& kernel);

// Kernel matrix between two point sets: entry (i, j) = k(a_i, b_j).
Eigen::MatrixXd gram(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b,
                     const KernelSpec& kernel);

// h evaluated at every row of `points`.
Eigen::VectorXd evaluate(const RkhsFunction& h, const Eigen::MatrixXd& points);

// Seeded subsample of L rows of `pooled`, without replacement.
Eigen::MatrixXd choose_centers(const Eigen::MatrixXd& pooled, int L, std::uint64_t seed);

// Dictionary design shared by the quadratic fits: features of every row and
// their empirical second-moment matrix (phi' phi) / rows.
struct RkhsDesign {
  KernelSpec kernel;
  Eigen::MatrixXd centers;        // L x d
  Eigen::MatrixXd phi;            // rows x L
  Eigen::MatrixXd second_moment;  // L x L
};

RkhsDesign make_design(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                       const KernelSpec& kernel);

}  // namespace npjive
