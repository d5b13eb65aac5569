#include "npjive/kernel.hpp"

#include "npjive/rng.hpp"

namespace npjive {

void RkhsFunction::validate() const {
  kernel.validate();
  if (centers.cols() != kernel.dim)
    throw InputError("RkhsFunction: center dimension does not match kernel dimension");
  if (coeffs.size() != centers.rows())
    throw InputError("RkhsFunction: coefficient count does not match center count");
}

double RkhsFunction::value(const Eigen::RowVectorXd& s) const {
  return evaluate(*this, s)(0);
}

RkhsFunction zero_function(const KernelSpec& kernel) {
  RkhsFunction h;
  h.kernel = kernel;
  h.centers = Eigen::MatrixXd::Zero(1, kernel.dim);
  h.coeffs = Eigen::VectorXd::Zero(1);
  return h;
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& points_a, const Eigen::MatrixXd& points_b,
                     const KernelSpec& kernel) {
  kernel.validate();
  if (points_a.cols() != kernel.dim || points_b.cols() != kernel.dim)
    throw InputError("gram: point dimension does not match kernel dimension");
  const double inv_two_nu_sq = 1.0 / (2.0 * kernel.nu * kernel.nu);
  // |a_i - b_j|^2 = |a_i|^2 + |b_j|^2 - 2 a_i . b_j
  const Eigen::VectorXd sq_a = points_a.rowwise().squaredNorm();
  const Eigen::VectorXd sq_b = points_b.rowwise().squaredNorm();
  Eigen::MatrixXd out = -2.0 * (points_a * points_b.transpose());
  out.colwise() += sq_a;
  out.rowwise() += sq_b.transpose();
  // Rounding can leave tiny negative squared distances.
  out = (-inv_two_nu_sq * out.cwiseMax(0.0)).array().exp();
  return out;
}

Eigen::VectorXd evaluate(const RkhsFunction& h, const Eigen::MatrixXd& points) {
  h.validate();
  if (points.cols() != h.kernel.dim)
    throw InputError("evaluate: point dimension does not match kernel dimension");
  return gram(points, h.centers, h.kernel) * h.coeffs;
}

Eigen::MatrixXd choose_centers(const Eigen::MatrixXd& pooled, int L, std::uint64_t seed) {
  const int pool = static_cast<int>(pooled.rows());
  if (L < 1) throw InputError("choose_centers: dictionary size must be >= 1");
  if (L > pool)
    throw InputError("choose_centers: dictionary size exceeds pooled sample size");
  Rng rng(Rng::stream_seed(seed, {0x63656e74ULL}));
  const std::vector<int> picked = rng.sample_without_replacement(pool, L);
  Eigen::MatrixXd centers(L, pooled.cols());
  for (int j = 0; j < L; ++j) centers.row(j) = pooled.row(picked[static_cast<std::size_t>(j)]);
  return centers;
}

RkhsDesign make_design(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centers,
                       const KernelSpec& kernel) {
  RkhsDesign design;
  design.kernel = kernel;
  design.centers = centers;
  design.phi = gram(points, centers, kernel);
  const double rows = static_cast<double>(points.rows());
  design.second_moment = (design.phi.transpose() * design.phi) / rows;
  return design;
}

}  // namespace npjive
