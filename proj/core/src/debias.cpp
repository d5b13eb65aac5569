#include "npjive/debias.hpp"

namespace npjive {

void DebiasConfig::validate() const {
  if (mu < 0.0) throw InputError("DebiasConfig: mu must be nonnegative");
  if (tau && *tau < 0.0) throw InputError("DebiasConfig: tau must be nonnegative");
  if (!(nu > 0.0)) throw InputError("DebiasConfig: nu must be positive");
  if (dictionary_size < 1) throw InputError("DebiasConfig: dictionary size must be >= 1");
  if (!(jitter > 0.0)) throw InputError("DebiasConfig: jitter must be positive");
}

void ArmWeightFunction::validate() const {
  if (gamma.size() != static_cast<Eigen::Index>(basis.size()))
    throw InputError("ArmWeightFunction: gamma length does not match basis size");
  for (const RkhsFunction& q : basis) q.validate();
}

double ArmWeightFunction::weight_for_arm(int a) const {
  if (a < 0 || a >= num_arms())
    throw InputError("ArmWeightFunction: arm index out of range");
  return gamma(a);
}

double ArmWeightFunction::value_at(const Eigen::RowVectorXd& s) const {
  double total = 0.0;
  for (int a = 0; a < num_arms(); ++a) total += gamma(a) * basis[static_cast<std::size_t>(a)].value(s);
  return total;
}

namespace {

DebiasConfig effective(const DebiasConfig& cfg) {
  cfg.validate();
  return cfg;
}

}  // namespace

RkhsFunction fit_debias_exact(const HistoricalDataset& data, const NovelDataset& novel,
                              const DebiasConfig& cfg) {
  data.validate();
  novel.validate();
  effective(cfg);
  if (data.num_folds != 2)
    throw InputError("fit_debias_exact needs a 2-fold assignment");
  const Eigen::MatrixXd centers = detail::resolve_centers(
      data, &novel, cfg.dictionary_size, cfg.seed, cfg.centers);
  const KernelSpec kernel{cfg.nu, data.dim()};
  const RkhsDesign design = make_design(data.S, centers, kernel);

  const ArmMoments m = arm_moments(data, design.phi, /*by_fold=*/true);
  const int k = data.num_arms;
  const Eigen::MatrixXd& f0 = m.feature_mean[0];
  const Eigen::MatrixXd& f1 = m.feature_mean[1];
  const Eigen::MatrixXd cross = f0.transpose() * f1;
  const Eigen::MatrixXd quad =
      (cross + cross.transpose()) / (2.0 * k) + 2.0 * cfg.mu * design.second_moment;
  const Eigen::VectorXd linear =
      gram(novel.S, centers, kernel).colwise().mean().transpose();
  SpdSolver solver(quad, cfg.jitter, "increase mu");

  RkhsFunction xi;
  xi.kernel = kernel;
  xi.centers = centers;
  xi.coeffs = solver.solve(linear);
  xi.folds_seen = detail::fit_provenance(data);
  return xi;
}

QaWorkspace make_qa_workspace(const HistoricalDataset& data, const NovelDataset* novel,
                              const DebiasConfig& cfg) {
  data.validate();
  effective(cfg);
  QaWorkspace ws;
  ws.centers = detail::resolve_centers(data, novel, cfg.dictionary_size, cfg.seed,
                                       cfg.centers);
  ws.kernel = KernelSpec{cfg.nu, data.dim()};
  const RkhsDesign design = make_design(data.S, ws.centers, ws.kernel);
  ws.phi = design.phi;
  ws.second_moment = design.second_moment;
  ws.solver = std::make_shared<const SpdSolver>(ws.second_moment, cfg.jitter,
                                                "increase jitter or dictionary spread");
  ws.by_arm = rows_by_arm(data);
  const ArmMoments m = arm_moments(data, ws.phi, /*by_fold=*/false);
  ws.arm_feature_mean = m.feature_mean[0];
  return ws;
}

Eigen::VectorXd QaWorkspace::qa_coeffs(const HistoricalDataset& data, int a,
                                       std::optional<int> exclude) const {
  if (a < 0 || a >= data.num_arms) throw InputError("qa_coeffs: arm index out of range");
  Eigen::VectorXd target = arm_feature_mean.row(a).transpose();
  if (exclude) {
    if (data.per_arm < 2)
      throw InputError("jackknife fit needs at least 2 units in the arm");
    const int i = *exclude;
    if (i < 0 || i >= data.rows() || data.arm[static_cast<std::size_t>(i)] != a)
      throw InputError("jackknife fit: excluded row must belong to the target arm");
    const double n = static_cast<double>(data.per_arm);
    target = (n * target - phi.row(i).transpose()) / (n - 1.0);
  }
  return solver->solve(target);
}

RkhsFunction fit_qa_star(const HistoricalDataset& data, int a, const DebiasConfig& cfg,
                         std::optional<int> exclude) {
  const QaWorkspace ws = make_qa_workspace(data, nullptr, cfg);
  RkhsFunction q;
  q.kernel = ws.kernel;
  q.centers = ws.centers;
  q.coeffs = ws.qa_coeffs(data, a, exclude);
  q.folds_seen = detail::fit_provenance(data);
  return q;
}

Eigen::MatrixXd assemble_C(const HistoricalDataset& data,
                           const std::vector<RkhsFunction>& basis,
                           const std::vector<std::vector<RkhsFunction>>& loo_basis) {
  data.validate();
  const int k = data.num_arms;
  if (static_cast<int>(basis.size()) != k)
    throw InputError("assemble_C: need one basis function per arm");
  if (static_cast<int>(loo_basis.size()) != k)
    throw InputError("assemble_C: need jackknife fits for every arm");
  const double n_rows = static_cast<double>(data.rows());
  const double kn = static_cast<double>(k) * data.per_arm;
  const std::vector<std::vector<int>> by_arm = rows_by_arm(data);

  Eigen::MatrixXd values(data.rows(), k);  // q_a evaluated at every row
  for (int a = 0; a < k; ++a) values.col(a) = evaluate(basis[static_cast<std::size_t>(a)], data.S);
  Eigen::MatrixXd c = (values.transpose() * values) / n_rows;

  for (int a = 0; a < k; ++a) {
    const auto& rows = by_arm[static_cast<std::size_t>(a)];
    if (loo_basis[static_cast<std::size_t>(a)].size() != rows.size())
      throw InputError("assemble_C: jackknife fits must follow the arm's row order");
    double diag = 0.0;
    for (std::size_t pos = 0; pos < rows.size(); ++pos) {
      const RkhsFunction& q_loo = loo_basis[static_cast<std::size_t>(a)][pos];
      diag += q_loo.value(data.S.row(rows[pos]));
    }
    c(a, a) = diag / kn;
  }
  return c;
}

Eigen::VectorXd jackknife_diagonal_fast(const QaWorkspace& ws,
                                        const HistoricalDataset& data) {
  const int k = data.num_arms;
  const double n = static_cast<double>(data.per_arm);
  if (data.per_arm < 2)
    throw InputError("jackknife diagonal needs at least 2 units per arm");
  const double kn = static_cast<double>(k) * n;

  // q_{a,-i}(S_i) = (n phi_i' u_a - phi_i' M^{-1} phi_i) / (n - 1) with
  // u_a = M^{-1} phibar_a; both pieces come from batched solves.
  const Eigen::MatrixXd u = ws.solver->solve_fast_many(ws.arm_feature_mean.transpose());
  const Eigen::MatrixXd w = ws.solver->solve_fast_many(ws.phi.transpose());  // L x N
  const Eigen::VectorXd self = (ws.phi.array() * w.transpose().array()).rowwise().sum();

  Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
  for (int a = 0; a < k; ++a) {
    const auto& rows = ws.by_arm[static_cast<std::size_t>(a)];
    double total = 0.0;
    for (const int i : rows) {
      const double mean_term = ws.phi.row(i).dot(u.col(a));
      total += (n * mean_term - self(i)) / (n - 1.0);
    }
    diag(a) = total / kn;
  }
  return diag;
}

Eigen::VectorXd jackknife_diagonal_naive(const QaWorkspace& ws,
                                         const HistoricalDataset& data) {
  const int k = data.num_arms;
  const double n = static_cast<double>(data.per_arm);
  if (data.per_arm < 2)
    throw InputError("jackknife diagonal needs at least 2 units per arm");
  const double kn = static_cast<double>(k) * n;
  // Same diagonal loading the shared solver applied.
  Eigen::MatrixXd loaded = ws.second_moment;
  loaded.diagonal().array() += ws.solver->jitter_applied();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(k);
  for (int a = 0; a < k; ++a) {
    const auto& rows = ws.by_arm[static_cast<std::size_t>(a)];
    double total = 0.0;
    for (const int i : rows) {
      Eigen::LLT<Eigen::MatrixXd> llt(loaded);
      if (llt.info() != Eigen::Success)
        throw NumericError("jackknife refit: factorization failed");
      const Eigen::VectorXd target =
          (n * ws.arm_feature_mean.row(a).transpose() - ws.phi.row(i).transpose()) /
          (n - 1.0);
      const Eigen::VectorXd beta = llt.solve(target);
      total += ws.phi.row(i).dot(beta);
    }
    diag(a) = total / kn;
  }
  return diag;
}

ArmWeightFunction fit_q_approx(const HistoricalDataset& data, const NovelDataset& novel,
                               const DebiasConfig& cfg) {
  data.validate();
  novel.validate();
  effective(cfg);
  const QaWorkspace ws = make_qa_workspace(data, &novel, cfg);
  const int k = data.num_arms;
  const double n_rows = static_cast<double>(data.rows());

  // Full-sample basis coefficients, all against the one factorization.
  const Eigen::MatrixXd beta = ws.solver->solve_many(ws.arm_feature_mean.transpose());

  // Off-diagonal block of C from full-sample products; diagonal jackknifed.
  const Eigen::MatrixXd values = ws.phi * beta;  // N x K
  Eigen::MatrixXd c = (values.transpose() * values) / n_rows;
  c.diagonal() = jackknife_diagonal_fast(ws, data);

  const Eigen::MatrixXd phi_new = gram(novel.S, ws.centers, ws.kernel);
  const Eigen::VectorXd v =
      (phi_new * beta).colwise().mean().transpose();  // novel means of each q_a

  const Eigen::MatrixXd c_sym = (c + c.transpose()) / 2.0;
  const double tau = cfg.tau ? *cfg.tau
                             : 1e-6 * std::max(c_sym.diagonal().mean(), 0.0);
  Eigen::MatrixXd system = c_sym;
  system.diagonal().array() += tau;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success)
    throw NumericError("gamma system is not positive definite; increase tau");
  Eigen::VectorXd gamma = llt.solve(v);
  gamma += llt.solve(Eigen::VectorXd(v - system * gamma));

  ArmWeightFunction q;
  q.gamma = gamma;
  q.mode = ArmWeightFunction::Mode::kArmIndicator;
  q.folds_seen = detail::fit_provenance(data);
  q.basis.reserve(static_cast<std::size_t>(k));
  for (int a = 0; a < k; ++a) {
    RkhsFunction qa;
    qa.kernel = ws.kernel;
    qa.centers = ws.centers;
    qa.coeffs = beta.col(a);
    qa.folds_seen = q.folds_seen;
    q.basis.push_back(std::move(qa));
  }
  return q;
}

}  // namespace npjive
