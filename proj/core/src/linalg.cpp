#include "npjive/linalg.hpp"

#include <utility>

namespace npjive {

SpdSolver::SpdSolver(Eigen::MatrixXd matrix, double jitter, std::string advice)
    : matrix_(std::move(matrix)), advice_(std::move(advice)) {
  if (matrix_.rows() != matrix_.cols())
    throw InputError("SpdSolver: matrix must be square");
  const double l = static_cast<double>(matrix_.rows());
  const double trace = matrix_.trace();
  eps_ = jitter * (trace > 0.0 ? trace / l : 1.0);
  if (eps_ > 0.0) matrix_.diagonal().array() += eps_;
  llt_.compute(matrix_);
  if (llt_.info() != Eigen::Success)
    throw NumericError("linear system is not positive definite after regularization; " +
                       advice_);
}

Eigen::VectorXd SpdSolver::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd x = llt_.solve(rhs);
  // One refinement pass, then enforce the stationarity contract.
  Eigen::VectorXd residual = rhs - matrix_ * x;
  x += llt_.solve(residual);
  residual = rhs - matrix_ * x;
  const double tol = 1e-8 * (1.0 + rhs.norm());
  if (!(residual.norm() <= tol))
    throw NumericError("linear solve failed to reach stationarity; " + advice_);
  return x;
}

Eigen::MatrixXd SpdSolver::solve_many(const Eigen::MatrixXd& rhs) const {
  Eigen::MatrixXd x = llt_.solve(rhs);
  x += llt_.solve(Eigen::MatrixXd(rhs - matrix_ * x));
  return x;
}

}  // namespace npjive
