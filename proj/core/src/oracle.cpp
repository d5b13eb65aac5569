#include "npjive/oracle.hpp"

#include <cmath>

#include "npjive/npjive.hpp"

namespace npjive {

namespace {

constexpr double kRankTol = 1e-10;  // relative singular-value cutoff
constexpr double kIdTol = 1e-8;     // least-squares residual behind the id flag

// Euclidean embeddings of the weighted geometries: h_tilde = D h with
// D = diag(sqrt(pooled)), g_tilde = g / sqrt(K). The operator in these
// coordinates is t_tilde = cond_pmf * D^{-1} / sqrt(K), whose plain transpose
// is the adjoint.
struct TildeOperator {
  Eigen::VectorXd pooled;
  Eigen::VectorXd d;        // sqrt(pooled)
  Eigen::MatrixXd t_tilde;  // K x M
};

TildeOperator tilde_operator(const DiscreteWorld& world) {
  TildeOperator op;
  op.pooled = world.pooled_pmf();
  for (int m = 0; m < world.support_size(); ++m)
    if (!(op.pooled(m) > 0.0))
      throw InputError("discrete world: pooled mass must be positive at every support point");
  op.d = op.pooled.cwiseSqrt();
  const double root_k = std::sqrt(static_cast<double>(world.num_arms()));
  op.t_tilde = world.cond_pmf * op.d.cwiseInverse().asDiagonal() / root_k;
  return op;
}

int svd_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0.0) return 0;
  const double cutoff = rel_tol * sv(0);
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) ++rank;
  return rank;
}

// Minimum-norm least-squares solve via SVD with the shared cutoff.
Eigen::VectorXd pinv_solve(const Eigen::MatrixXd& m, const Eigen::VectorXd& b) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 ? kRankTol * sv(0) : 0.0;
  Eigen::VectorXd inv_sv = Eigen::VectorXd::Zero(sv.size());
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff) inv_sv(i) = 1.0 / sv(i);
  return svd.matrixV() * inv_sv.asDiagonal() * (svd.matrixU().transpose() * b);
}

}  // namespace

void DiscreteWorld::validate() const {
  const int k = num_arms();
  const int m = support_size();
  if (k < 1 || m < 1) throw InputError("discrete world: empty support or arms");
  if (novel_pmf.size() != m || outcome_mean.size() != m || outcome_spread.size() != m ||
      support.size() != m)
    throw InputError("discrete world: field lengths disagree");
  for (int a = 0; a < k; ++a) {
    if (cond_pmf.row(a).minCoeff() < 0.0)
      throw InputError("discrete world: negative conditional mass");
    if (std::abs(cond_pmf.row(a).sum() - 1.0) > 1e-12)
      throw InputError("discrete world: conditional pmf row does not sum to 1");
  }
  if (novel_pmf.minCoeff() < 0.0) throw InputError("discrete world: negative novel mass");
  if (std::abs(novel_pmf.sum() - 1.0) > 1e-12)
    throw InputError("discrete world: novel pmf does not sum to 1");
  if (outcome_spread.minCoeff() < 0.0)
    throw InputError("discrete world: negative outcome spread");
}

Eigen::VectorXd DiscreteWorld::pooled_pmf() const {
  return cond_pmf.colwise().mean().transpose();
}

Eigen::VectorXd DiscreteWorld::arm_means(const Eigen::VectorXd& h) const {
  return cond_pmf * h;
}

double DiscreteWorld::arm_norm(const Eigen::VectorXd& g) const {
  return std::sqrt(g.squaredNorm() / static_cast<double>(num_arms()));
}

double DiscreteWorld::pooled_norm(const Eigen::VectorXd& h) const {
  return std::sqrt(h.array().square().matrix().dot(pooled_pmf()));
}

Eigen::MatrixXd exact_operator(const DiscreteWorld& world) {
  world.validate();
  return world.cond_pmf;
}

RieszNuisances riesz_and_nuisances(const DiscreteWorld& world) {
  world.validate();
  const TildeOperator op = tilde_operator(world);

  RieszNuisances out;
  out.rho = world.novel_pmf.cwiseQuotient(op.pooled);
  out.alpha = out.rho;  // projection onto the full space is the identity

  const Eigen::VectorXd alpha_tilde = op.d.cwiseProduct(out.alpha);
  // alpha in range(T*)? residual of the weighted least squares over arm functions
  const Eigen::VectorXd g = pinv_solve(op.t_tilde.transpose(), alpha_tilde);
  out.id_residual = (op.t_tilde.transpose() * g - alpha_tilde).norm();
  out.identified = out.id_residual <= kIdTol * std::max(1.0, alpha_tilde.norm());

  if (out.identified) {
    const Eigen::MatrixXd normal = op.t_tilde.transpose() * op.t_tilde;
    const Eigen::VectorXd xi_tilde = pinv_solve(normal, alpha_tilde);
    out.xi = xi_tilde.cwiseQuotient(op.d);
  }

  const Eigen::VectorXd r0 = world.cond_pmf * world.outcome_mean;
  const double root_k = std::sqrt(static_cast<double>(world.num_arms()));
  const Eigen::VectorXd h_tilde = pinv_solve(op.t_tilde, r0 / root_k);
  out.h_dagger = h_tilde.cwiseQuotient(op.d);
  return out;
}

bool rank_equivalence(const Eigen::MatrixXd& t, double rel_tol) {
  const Eigen::MatrixXd tt = t.transpose() * t;
  return svd_rank(t.transpose(), rel_tol) == svd_rank(tt, rel_tol);
}

bool check_id_equiv(const DiscreteWorld& world) {
  world.validate();
  return rank_equivalence(tilde_operator(world).t_tilde, kRankTol);
}

CrossfoldExpectation enumerate_crossfold_expectation(const DiscreteWorld& world,
                                                     const Eigen::VectorXd& h,
                                                     int n_per_fold) {
  world.validate();
  if (h.size() != world.support_size())
    throw InputError("enumerate: hypothesis length must match the support size");
  if (n_per_fold < 1) throw InputError("enumerate: n_per_fold must be >= 1");
  const int m = world.support_size();
  const int units = 2 * n_per_fold;
  const int radix = 2 * m;  // (support point, residual sign) per unit
  double atoms = static_cast<double>(world.num_arms());
  for (int u = 0; u < units; ++u) atoms *= radix;
  if (atoms > 1e7)
    throw InputError("enumerate: atom count exceeds 1e7; use a smaller world");

  // Single-arm skeleton reused across atoms; S values never enter the risks.
  HistoricalDataset skeleton;
  skeleton.num_arms = 1;
  skeleton.per_arm = units;
  skeleton.num_folds = 2;
  skeleton.S = Eigen::MatrixXd::Zero(units, 1);
  skeleton.Y = Eigen::VectorXd::Zero(units);
  skeleton.arm.assign(static_cast<std::size_t>(units), 0);
  skeleton.arm_labels = {"0"};
  skeleton.fold.resize(static_cast<std::size_t>(units));
  for (int u = 0; u < units; ++u)
    skeleton.fold[static_cast<std::size_t>(u)] = u < n_per_fold ? 0 : 1;

  const long per_arm_atoms = static_cast<long>(std::llround(std::pow(radix, units)));
  Eigen::VectorXd residuals(units);
  std::vector<int> digit(static_cast<std::size_t>(units), 0);

  CrossfoldExpectation out;
  for (int a = 0; a < world.num_arms(); ++a) {
    double e_cross = 0.0;
    double e_plug = 0.0;
    std::fill(digit.begin(), digit.end(), 0);
    for (long atom = 0; atom < per_arm_atoms; ++atom) {
      double prob = 1.0;
      for (int u = 0; u < units; ++u) {
        const int d = digit[static_cast<std::size_t>(u)];
        const int point = d >> 1;
        const double sign = (d & 1) ? -1.0 : 1.0;
        prob *= 0.5 * world.cond_pmf(a, point);
        residuals(u) =
            world.outcome_mean(point) + sign * world.outcome_spread(point) - h(point);
      }
      if (prob > 0.0) {
        e_cross += prob * detail::crossfold_risk_from_residuals(residuals, skeleton);
        e_plug += prob * detail::plug_in_risk_from_residuals(residuals, skeleton);
      }
      // mixed-radix increment
      for (int u = 0; u < units; ++u) {
        if (++digit[static_cast<std::size_t>(u)] < radix) break;
        digit[static_cast<std::size_t>(u)] = 0;
      }
    }
    out.crossfold += e_cross;
    out.plugin += e_plug;
  }
  const double k = static_cast<double>(world.num_arms());
  out.crossfold /= k;
  out.plugin /= k;
  return out;
}

double population_risk(const DiscreteWorld& world, const Eigen::VectorXd& h) {
  world.validate();
  const Eigen::VectorXd gap = world.arm_means(h - world.outcome_mean);
  return gap.squaredNorm() / (2.0 * world.num_arms());
}

double plugin_bias_formula(const DiscreteWorld& world, const Eigen::VectorXd& h,
                           int n_units) {
  world.validate();
  if (n_units < 1) throw InputError("plugin_bias_formula: n_units must be >= 1");
  const int k = world.num_arms();
  double total = 0.0;
  for (int a = 0; a < k; ++a) {
    double second = 0.0, first = 0.0;
    for (int m = 0; m < world.support_size(); ++m) {
      const double r = world.outcome_mean(m) - h(m);
      const double p = world.cond_pmf(a, m);
      second += p * (r * r + world.outcome_spread(m) * world.outcome_spread(m));
      first += p * r;
    }
    total += (second - first * first) / n_units;
  }
  return total / (2.0 * k);
}

double theta_star(const DiscreteWorld& world) {
  const RieszNuisances nuis = riesz_and_nuisances(world);
  if (!nuis.identified)
    throw InputError("theta_star: world is not identified");
  return world.novel_pmf.dot(nuis.h_dagger);
}

MixedBiasCheck mixed_bias_check(const DiscreteWorld& world, const Eigen::VectorXd& h,
                                const Eigen::VectorXd& xi) {
  const RieszNuisances nuis = riesz_and_nuisances(world);
  if (!nuis.identified)
    throw InputError("mixed_bias_check: world is not identified");
  const double theta_true = world.novel_pmf.dot(nuis.h_dagger);

  // E[psi] = E_new[h] + E_A[ E[xi | A] * E[Y - h | A] ] with the independent
  // within-arm copy making the conditional expectations factor.
  const Eigen::VectorXd t_xi = world.arm_means(xi);
  const Eigen::VectorXd t_gap = world.arm_means(world.outcome_mean - h);
  const double e_psi = world.novel_pmf.dot(h) +
                       t_xi.dot(t_gap) / static_cast<double>(world.num_arms());

  MixedBiasCheck out;
  out.lhs = std::abs(e_psi - theta_true);
  out.rhs = world.arm_norm(world.arm_means(xi - *nuis.xi)) *
            world.arm_norm(world.arm_means(h - nuis.h_dagger));
  return out;
}

PsiInequalityCheck psi_inequality_check(const DiscreteWorld& world) {
  world.validate();
  const TildeOperator op = tilde_operator(world);
  const RieszNuisances nuis = riesz_and_nuisances(world);
  const int k = world.num_arms();
  const int m = world.support_size();

  // Basis q_a = T* 1{.=a} in tilde coordinates: column a of t_tilde' / sqrt(K).
  const Eigen::MatrixXd q_tilde = op.t_tilde.transpose() /
                                  std::sqrt(static_cast<double>(k));
  const Eigen::MatrixXd gram_q = q_tilde.transpose() * q_tilde;
  const Eigen::VectorXd alpha_tilde = op.d.cwiseProduct(nuis.alpha);
  const Eigen::VectorXd v = q_tilde.transpose() * alpha_tilde;

  PsiInequalityCheck out;
  out.gamma = pinv_solve(gram_q, v);
  out.delta_k = (alpha_tilde - q_tilde * out.gamma).norm();

  // Null-space mass of the structural truth under the pooled geometry.
  const Eigen::VectorXd h_star_tilde = op.d.cwiseProduct(world.outcome_mean);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(op.t_tilde, Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double cutoff = sv.size() > 0 && sv(0) > 0.0 ? kRankTol * sv(0) : 0.0;
  Eigen::VectorXd null_mass = h_star_tilde;
  for (int i = 0; i < sv.size(); ++i) {
    if (sv(i) > cutoff)
      null_mass -= svd.matrixV().col(i) * svd.matrixV().col(i).dot(h_star_tilde);
  }
  out.eps_k = null_mass.norm();

  const double theta_true = world.novel_pmf.dot(world.outcome_mean);
  const Eigen::VectorXd t_gap = world.arm_means(world.outcome_mean - nuis.h_dagger);
  const double e_psi =
      world.novel_pmf.dot(nuis.h_dagger) + out.gamma.dot(t_gap) / static_cast<double>(k);
  out.lhs = std::abs(e_psi - theta_true);
  return out;
}

HistoricalDataset sample_historical(const DiscreteWorld& world, int per_arm,
                                    std::uint64_t seed) {
  world.validate();
  if (per_arm < 1) throw InputError("sample_historical: per_arm must be >= 1");
  const int k = world.num_arms();
  HistoricalDataset data;
  data.num_arms = k;
  data.per_arm = per_arm;
  data.S.resize(k * per_arm, 1);
  data.Y.resize(k * per_arm);
  data.arm.resize(static_cast<std::size_t>(k * per_arm));
  for (int a = 0; a < k; ++a) {
    data.arm_labels.push_back(std::to_string(a));
    Rng rng = Rng::derive(seed, {0x776f726cULL, static_cast<std::uint64_t>(a)});
    std::vector<double> pmf(static_cast<std::size_t>(world.support_size()));
    for (int j = 0; j < world.support_size(); ++j)
      pmf[static_cast<std::size_t>(j)] = world.cond_pmf(a, j);
    for (int u = 0; u < per_arm; ++u) {
      const int i = a * per_arm + u;
      const int point = rng.discrete(pmf);
      const double sign = rng.uniform01() < 0.5 ? 1.0 : -1.0;
      data.S(i, 0) = world.support(point);
      data.Y(i) = world.outcome_mean(point) + sign * world.outcome_spread(point);
      data.arm[static_cast<std::size_t>(i)] = a;
    }
  }
  data.validate();
  return data;
}

NovelDataset sample_novel(const DiscreteWorld& world, int rows, std::uint64_t seed) {
  world.validate();
  if (rows < 1) throw InputError("sample_novel: rows must be >= 1");
  NovelDataset out;
  out.S.resize(rows, 1);
  Rng rng = Rng::derive(seed, {0x6e6f7665ULL});
  std::vector<double> pmf(static_cast<std::size_t>(world.support_size()));
  for (int j = 0; j < world.support_size(); ++j)
    pmf[static_cast<std::size_t>(j)] = world.novel_pmf(j);
  for (int i = 0; i < rows; ++i) out.S(i, 0) = world.support(rng.discrete(pmf));
  return out;
}

namespace {

Eigen::VectorXd random_pmf(Rng& rng, int size, double floor_mass) {
  Eigen::VectorXd p(size);
  for (int i = 0; i < size; ++i)
    p(i) = floor_mass - std::log(1.0 - rng.uniform01());
  return p / p.sum();
}

}  // namespace

DiscreteWorld random_world(Rng& rng, int num_arms, int support_size,
                           bool allow_rank_deficient) {
  DiscreteWorld world;
  world.cond_pmf.resize(num_arms, support_size);
  for (int a = 0; a < num_arms; ++a)
    world.cond_pmf.row(a) = random_pmf(rng, support_size, 0.1).transpose();
  if (allow_rank_deficient && num_arms >= 2 && rng.uniform01() < 0.3) {
    // duplicated arms force rank deficiency
    const int src = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_arms)));
    const int dst = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_arms)));
    world.cond_pmf.row(dst) = world.cond_pmf.row(src);
  }
  world.novel_pmf = random_pmf(rng, support_size, 0.05);
  world.outcome_mean.resize(support_size);
  world.outcome_spread.resize(support_size);
  world.support.resize(support_size);
  for (int m = 0; m < support_size; ++m) {
    world.outcome_mean(m) = rng.uniform(-1.0, 1.0);
    world.outcome_spread(m) = rng.uniform(0.1, 0.5);
    world.support(m) = support_size == 1
                           ? 0.0
                           : -1.0 + 2.0 * m / static_cast<double>(support_size - 1);
  }
  return world;
}

DiscreteWorld random_identified_world(Rng& rng, int num_arms, int support_size) {
  DiscreteWorld world = random_world(rng, num_arms, support_size,
                                     /*allow_rank_deficient=*/false);
  // a pooled mixture of the arm laws is always in the operator's row space
  const Eigen::VectorXd weights = random_pmf(rng, num_arms, 0.05);
  world.novel_pmf = (weights.transpose() * world.cond_pmf).transpose();
  world.novel_pmf /= world.novel_pmf.sum();
  return world;
}

bool OracleBatteryReport::all_pass() const {
  for (const Line& line : lines)
    if (!line.pass) return false;
  return true;
}

OracleBatteryReport run_oracle_battery(const OracleBatteryConfig& cfg) {
  OracleBatteryReport report;
  char detail[256];

  {  // exact unbiasedness of the cross-fold risk + plug-in bias formula
    Rng rng(Rng::stream_seed(cfg.seed, {1}));
    double max_cross_gap = 0.0, max_plugin_gap = 0.0;
    for (int w = 0; w < cfg.unbiasedness_worlds; ++w) {
      const int k = 1 + static_cast<int>(rng.below(3));
      const int m = 2 + static_cast<int>(rng.below(2));
      const int n_per_fold = 1 + static_cast<int>(rng.below(2));
      const DiscreteWorld world = random_world(rng, k, m);
      for (int t = 0; t < cfg.unbiasedness_hypotheses; ++t) {
        Eigen::VectorXd h(m);
        for (int j = 0; j < m; ++j) h(j) = rng.uniform(-1.0, 1.0);
        const CrossfoldExpectation e = enumerate_crossfold_expectation(world, h, n_per_fold);
        const double r1 = population_risk(world, h);
        const double bias = plugin_bias_formula(world, h, 2 * n_per_fold);
        max_cross_gap = std::max(max_cross_gap, std::abs(e.crossfold - r1));
        max_plugin_gap = std::max(max_plugin_gap, std::abs(e.plugin - r1 - bias));
      }
    }
    const bool pass = max_cross_gap <= 1e-12 && max_plugin_gap <= 1e-10;
    std::snprintf(detail, sizeof(detail),
                  "max |E[crossfold] - R1| = %.2e (tol 1e-12), max plug-in formula gap = "
                  "%.2e (tol 1e-10)",
                  max_cross_gap, max_plugin_gap);
    report.lines.push_back({"crossfold-unbiasedness", pass, detail});
  }

  {  // identification rank equivalence
    Rng rng(Rng::stream_seed(cfg.seed, {2}));
    int failures = 0;
    for (int w = 0; w < cfg.rank_worlds; ++w) {
      const int k = 1 + static_cast<int>(rng.below(6));
      const int m = 1 + static_cast<int>(rng.below(8));
      const DiscreteWorld world = random_world(rng, k, m);
      if (!check_id_equiv(world)) ++failures;
    }
    std::snprintf(detail, sizeof(detail), "%d/%d worlds passed rank(T') == rank(T'T)",
                  cfg.rank_worlds - failures, cfg.rank_worlds);
    report.lines.push_back({"identification-equivalence", failures == 0, detail});
  }

  {  // mixed-bias inequality
    Rng rng(Rng::stream_seed(cfg.seed, {3}));
    int violations = 0;
    double worst_margin = 0.0;
    for (int w = 0; w < cfg.mixed_bias_worlds; ++w) {
      const int k = 2 + static_cast<int>(rng.below(4));
      const int m = 2 + static_cast<int>(rng.below(4));
      const DiscreteWorld world = random_identified_world(rng, k, m);
      const RieszNuisances nuis = riesz_and_nuisances(world);
      if (!nuis.identified) {
        ++violations;
        continue;
      }
      for (int t = 0; t < cfg.mixed_bias_pairs; ++t) {
        Eigen::VectorXd h = nuis.h_dagger;
        Eigen::VectorXd xi = *nuis.xi;
        const double scale_h = rng.uniform(0.0, 2.0);
        const double scale_xi = rng.uniform(0.0, 2.0);
        for (int j = 0; j < m; ++j) {
          h(j) += scale_h * rng.normal();
          xi(j) += scale_xi * rng.normal();
        }
        const MixedBiasCheck check = mixed_bias_check(world, h, xi);
        if (check.lhs > check.rhs + 1e-10) {
          ++violations;
          worst_margin = std::max(worst_margin, check.lhs - check.rhs);
        }
      }
    }
    std::snprintf(detail, sizeof(detail), "%d violations (worst margin %.2e)", violations,
                  worst_margin);
    report.lines.push_back({"mixed-bias-inequality", violations == 0, detail});
  }

  {  // psi inequality at the population gamma solve
    Rng rng(Rng::stream_seed(cfg.seed, {4}));
    int violations = 0;
    for (int w = 0; w < cfg.psi_worlds; ++w) {
      const int k = 1 + static_cast<int>(rng.below(5));
      const int m = 2 + static_cast<int>(rng.below(4));
      const DiscreteWorld world = w % 2 == 0 ? random_identified_world(rng, k, m)
                                             : random_world(rng, k, m);
      const PsiInequalityCheck check = psi_inequality_check(world);
      if (check.lhs > check.eps_k * check.delta_k + 1e-10) ++violations;
    }
    std::snprintf(detail, sizeof(detail), "%d violations over %d worlds", violations,
                  cfg.psi_worlds);
    report.lines.push_back({"psi-identification-gap", violations == 0, detail});
  }

  return report;
}

}  // namespace npjive
