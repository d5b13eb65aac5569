#include "npjive/npjive.hpp"

#include <cmath>

#include "npjive/linalg.hpp"

namespace npjive {

void FitConfig::validate() const {
  if (lambda < 0.0) throw InputError("FitConfig: lambda must be nonnegative");
  if (!(nu > 0.0)) throw InputError("FitConfig: nu must be positive");
  if (dictionary_size < 1) throw InputError("FitConfig: dictionary size must be >= 1");
  if (!(jitter > 0.0)) throw InputError("FitConfig: jitter must be positive");
}

FitConfig default_fit_config_for(int per_arm) {
  struct Row {
    int n;
    double lambda, nu;
    int L;
  };
  static const Row rows[] = {
      {30, 1e-2, 1.0 / 3.0, 5},
      {100, 1e-2, 1.0 / 4.0, 7},
      {300, 1e-1, 1.0 / 10.0, 10},
      {3000, 1e-1, 1.0 / 10.0, 10},
  };
  const double logn = std::log(static_cast<double>(per_arm < 1 ? 1 : per_arm));
  const Row* best = &rows[0];
  double best_gap = std::abs(logn - std::log(static_cast<double>(rows[0].n)));
  for (const Row& row : rows) {
    const double gap = std::abs(logn - std::log(static_cast<double>(row.n)));
    if (gap < best_gap) {
      best_gap = gap;
      best = &row;
    }
  }
  FitConfig cfg;
  cfg.lambda = best->lambda;
  cfg.nu = best->nu;
  cfg.dictionary_size = best->L;
  return cfg;
}

ArmMoments arm_moments(const HistoricalDataset& data, const Eigen::MatrixXd& phi,
                       bool by_fold) {
  const int folds = by_fold ? data.num_folds : 1;
  if (by_fold && !data.has_folds())
    throw InputError("arm_moments: dataset has no fold labels");
  const int k = data.num_arms;
  const int l = static_cast<int>(phi.cols());
  ArmMoments m;
  m.y_mean = Eigen::MatrixXd::Zero(folds, k);
  m.feature_mean.assign(static_cast<std::size_t>(folds), Eigen::MatrixXd::Zero(k, l));
  const double cell = static_cast<double>(data.per_arm) / folds;
  for (int i = 0; i < data.rows(); ++i) {
    const int a = data.arm[static_cast<std::size_t>(i)];
    const int v = by_fold ? data.fold[static_cast<std::size_t>(i)] : 0;
    m.y_mean(v, a) += data.Y(i);
    m.feature_mean[static_cast<std::size_t>(v)].row(a) += phi.row(i);
  }
  m.y_mean /= cell;
  for (auto& fm : m.feature_mean) fm /= cell;
  return m;
}

namespace detail {

double plug_in_risk_from_residuals(const Eigen::VectorXd& residuals,
                                   const HistoricalDataset& data) {
  const int k = data.num_arms;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
  for (int i = 0; i < data.rows(); ++i)
    mean(data.arm[static_cast<std::size_t>(i)]) += residuals(i);
  mean /= static_cast<double>(data.per_arm);
  return mean.squaredNorm() / (2.0 * k);
}

double crossfold_risk_from_residuals(const Eigen::VectorXd& residuals,
                                     const HistoricalDataset& data) {
  if (data.num_folds != 2)
    throw InputError("crossfold risk needs a 2-fold assignment");
  const int k = data.num_arms;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(2, k);
  for (int i = 0; i < data.rows(); ++i)
    mean(data.fold[static_cast<std::size_t>(i)], data.arm[static_cast<std::size_t>(i)]) +=
        residuals(i);
  mean /= static_cast<double>(data.per_arm) / 2.0;
  double total = 0.0;
  for (int a = 0; a < k; ++a) total += mean(0, a) * mean(1, a);
  return total / (2.0 * k);
}

Eigen::MatrixXd resolve_centers(const HistoricalDataset& data, const NovelDataset* novel,
                                int dictionary_size, std::uint64_t seed,
                                const std::optional<Eigen::MatrixXd>& override_centers) {
  if (override_centers) return *override_centers;
  if (novel == nullptr) return choose_centers(data.S, dictionary_size, seed);
  if (novel->dim() != data.dim())
    throw InputError("historical and novel dimensions disagree");
  Eigen::MatrixXd pooled(data.rows() + novel->rows(), data.dim());
  pooled.topRows(data.rows()) = data.S;
  pooled.bottomRows(novel->rows()) = novel->S;
  return choose_centers(pooled, dictionary_size, seed);
}

std::optional<std::vector<int>> fit_provenance(const HistoricalDataset& data) {
  if (!data.source_folds.empty()) return data.source_folds;
  if (data.has_folds()) {
    std::vector<int> all(static_cast<std::size_t>(data.num_folds));
    for (int v = 0; v < data.num_folds; ++v) all[static_cast<std::size_t>(v)] = v;
    return all;
  }
  return std::nullopt;
}

namespace {

// Symmetrized cross-fold quadratic and its linear term:
//   Q = (1/2K) sum_a (f0 f1' + f1 f0')    b = (1/2K) sum_a (m0 f1 + m1 f0)
// where f_v and m_v are the fold-v feature and outcome means of arm a.
struct CrossfoldQuadratic {
  Eigen::MatrixXd quad;
  Eigen::VectorXd linear;
};

CrossfoldQuadratic crossfold_quadratic(const HistoricalDataset& data,
                                       const Eigen::MatrixXd& phi) {
  if (data.num_folds != 2)
    throw InputError("cross-fold fit needs a 2-fold assignment");
  const ArmMoments m = arm_moments(data, phi, /*by_fold=*/true);
  const int k = data.num_arms;
  const Eigen::MatrixXd& f0 = m.feature_mean[0];
  const Eigen::MatrixXd& f1 = m.feature_mean[1];
  CrossfoldQuadratic out;
  const Eigen::MatrixXd cross = f0.transpose() * f1;  // sum_a f0_a f1_a'
  out.quad = (cross + cross.transpose()) / (2.0 * k);
  out.linear = (f1.transpose() * m.y_mean.row(0).transpose() +
                f0.transpose() * m.y_mean.row(1).transpose()) /
               (2.0 * k);
  return out;
}

RkhsFunction wrap_fit(const RkhsDesign& design, Eigen::VectorXd beta,
                      const HistoricalDataset& data) {
  RkhsFunction h;
  h.kernel = design.kernel;
  h.centers = design.centers;
  h.coeffs = std::move(beta);
  h.folds_seen = fit_provenance(data);
  return h;
}

}  // namespace

}  // namespace detail

double plug_in_risk(const RkhsFunction& h, const HistoricalDataset& data) {
  data.validate();
  const Eigen::VectorXd residuals = data.Y - evaluate(h, data.S);
  return detail::plug_in_risk_from_residuals(residuals, data);
}

double crossfold_risk(const RkhsFunction& h, const HistoricalDataset& data) {
  data.validate();
  const Eigen::VectorXd residuals = data.Y - evaluate(h, data.S);
  return detail::crossfold_risk_from_residuals(residuals, data);
}

double empirical_sq_norm(const RkhsFunction& h, const HistoricalDataset& data) {
  return evaluate(h, data.S).squaredNorm() / static_cast<double>(data.rows());
}

RkhsFunction fit_plugin(const HistoricalDataset& data, const FitConfig& cfg) {
  data.validate();
  cfg.validate();
  const Eigen::MatrixXd centers = detail::resolve_centers(
      data, nullptr, cfg.dictionary_size, cfg.seed, cfg.centers);
  const RkhsDesign design = make_design(data.S, centers, KernelSpec{cfg.nu, data.dim()});
  const ArmMoments m = arm_moments(data, design.phi, /*by_fold=*/false);
  const int k = data.num_arms;
  const Eigen::MatrixXd& f = m.feature_mean[0];
  const Eigen::MatrixXd quad =
      (f.transpose() * f) / k + 2.0 * cfg.lambda * design.second_moment;
  const Eigen::VectorXd linear = f.transpose() * m.y_mean.row(0).transpose() / k;
  SpdSolver solver(quad, cfg.jitter, "increase lambda");
  return detail::wrap_fit(design, solver.solve(linear), data);
}

RkhsFunction fit_npjive(const HistoricalDataset& data, const FitConfig& cfg) {
  data.validate();
  cfg.validate();
  const Eigen::MatrixXd centers = detail::resolve_centers(
      data, nullptr, cfg.dictionary_size, cfg.seed, cfg.centers);
  const RkhsDesign design = make_design(data.S, centers, KernelSpec{cfg.nu, data.dim()});
  const detail::CrossfoldQuadratic cq = detail::crossfold_quadratic(data, design.phi);
  const Eigen::MatrixXd quad = cq.quad + 2.0 * cfg.lambda * design.second_moment;
  SpdSolver solver(quad, cfg.jitter, "increase lambda");
  return detail::wrap_fit(design, solver.solve(cq.linear), data);
}

RkhsFunction fit_pooled_ridge(const HistoricalDataset& data, const FitConfig& cfg) {
  data.validate();
  cfg.validate();
  const Eigen::MatrixXd centers = detail::resolve_centers(
      data, nullptr, cfg.dictionary_size, cfg.seed, cfg.centers);
  const RkhsDesign design = make_design(data.S, centers, KernelSpec{cfg.nu, data.dim()});
  const Eigen::MatrixXd quad = (1.0 + cfg.lambda) * design.second_moment;
  const Eigen::VectorXd linear =
      design.phi.transpose() * data.Y / static_cast<double>(data.rows());
  SpdSolver solver(quad, cfg.jitter, "increase lambda");
  return detail::wrap_fit(design, solver.solve(linear), data);
}

}  // namespace npjive
