#pragma once

#include <Eigen/Dense>
#include <string>

#include "npjive/errors.hpp"

namespace npjive {

// Cholesky solver for M + eps*I where eps scales with the mean diagonal of M:
// eps = jitter * trace(M) / L (falling back to `jitter` alone when the trace
// is not positive). Gaussian-kernel moment matrices are routinely near
// singular, so every quadratic fit goes through this. Raises NumericError
// carrying `advice` when the regularized matrix is not positive definite, and
// checks the solved system to a 1e-8 relative residual after one refinement
// pass.
class SpdSolver {
 public:
  SpdSolver(Eigen::MatrixXd matrix, double jitter, std::string advice);

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve_many(const Eigen::MatrixXd& rhs) const;

  // Raw triangular solve without the refinement pass; used on hot paths where
  // the caller controls conditioning.
  Eigen::VectorXd solve_fast(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
  Eigen::MatrixXd solve_fast_many(const Eigen::MatrixXd& rhs) const { return llt_.solve(rhs); }

  double jitter_applied() const { return eps_; }
  const Eigen::MatrixXd& regularized_matrix() const { return matrix_; }

 private:
  Eigen::MatrixXd matrix_;  // M + eps I
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double eps_ = 0.0;
  std::string advice_;
};

}  // namespace npjive
