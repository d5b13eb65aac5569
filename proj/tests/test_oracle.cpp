#include <doctest.h>

#include <cmath>

#include "npjive/oracle.hpp"

using npjive::DiscreteWorld;

namespace {

DiscreteWorld two_point_world() {
  DiscreteWorld world;
  world.cond_pmf.resize(1, 2);
  world.cond_pmf << 0.5, 0.5;
  world.novel_pmf.resize(2);
  world.novel_pmf << 0.5, 0.5;
  world.outcome_mean.resize(2);
  world.outcome_mean << 0.0, 2.0;
  world.outcome_spread.resize(2);
  world.outcome_spread << 0.3, 0.3;
  world.support.resize(2);
  world.support << -1.0, 1.0;
  return world;
}

}  // namespace

TEST_CASE("exact_operator: identity conditional law gives the identity matrix") {
  DiscreteWorld world;
  world.cond_pmf = Eigen::MatrixXd::Identity(3, 3);
  world.novel_pmf = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
  world.outcome_mean = Eigen::VectorXd::Zero(3);
  world.outcome_spread = Eigen::VectorXd::Constant(3, 0.1);
  world.support.resize(3);
  world.support << -1, 0, 1;
  const Eigen::MatrixXd t = npjive::exact_operator(world);
  CHECK((t - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("arm means of a constant are the constant; a K=1 example by hand") {
  const DiscreteWorld world = two_point_world();
  CHECK(world.arm_means(Eigen::VectorXd::Constant(2, 3.7))(0) ==
        doctest::Approx(3.7).epsilon(1e-15));
  Eigen::VectorXd h(2);
  h << 0.0, 2.0;
  CHECK(world.arm_means(h)(0) == doctest::Approx(1.0));
}

TEST_CASE("riesz nuisances on equal laws: rho = alpha = 1, identified, T*T xi = 1") {
  npjive::Rng rng(3);
  const DiscreteWorld world = npjive::random_identified_world(rng, 3, 3);
  DiscreteWorld equal = world;
  equal.novel_pmf = world.pooled_pmf();
  const npjive::RieszNuisances nuis = npjive::riesz_and_nuisances(equal);
  CHECK((nuis.rho.array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK((nuis.alpha.array() - 1.0).abs().maxCoeff() <= 1e-12);
  CHECK(nuis.identified);
  REQUIRE(nuis.xi.has_value());
  // verify the normal equation directly: (T*T) xi = alpha under the weighted
  // adjoint (T*g)_m = sum_a p(m|a) g_a / (K pooled_m)
  const Eigen::VectorXd t_xi = equal.arm_means(*nuis.xi);
  const Eigen::VectorXd pooled = equal.pooled_pmf();
  for (int m = 0; m < 3; ++m) {
    double lhs = 0.0;
    for (int a = 0; a < 3; ++a) lhs += equal.cond_pmf(a, m) * t_xi(a);
    lhs /= 3.0 * pooled(m);
    CHECK(lhs == doctest::Approx(nuis.alpha(m)).epsilon(1e-9));
  }
}

TEST_CASE("square invertible operators identify every novel law") {
  npjive::Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    DiscreteWorld world = npjive::random_world(rng, 3, 3, false);
    const npjive::RieszNuisances nuis = npjive::riesz_and_nuisances(world);
    CHECK(nuis.identified);
  }
}

TEST_CASE("K=1 with mass off the single row direction is unidentified") {
  DiscreteWorld world = two_point_world();
  world.novel_pmf << 0.9, 0.1;  // not proportional to (0.5, 0.5)
  const npjive::RieszNuisances nuis = npjive::riesz_and_nuisances(world);
  CHECK_FALSE(nuis.identified);
  CHECK(nuis.id_residual >= 1e-8);
  CHECK_FALSE(nuis.xi.has_value());
  // and the pooled mixture itself stays identified
  world.novel_pmf << 0.5, 0.5;
  CHECK(npjive::riesz_and_nuisances(world).identified);
}

TEST_CASE("rank equivalence holds for random, rank-deficient, and zero matrices") {
  npjive::Rng rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    Eigen::MatrixXd t(5, 8);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 8; ++j) t(i, j) = rng.normal();
    if (trial % 3 == 0) t.row(3) = t.row(1);  // duplicated arms
    if (trial % 5 == 0) t.col(2).setZero();
    CHECK(npjive::rank_equivalence(t));
  }
  CHECK(npjive::rank_equivalence(Eigen::MatrixXd::Zero(4, 6)));
}

TEST_CASE("check_id_equiv on worlds with duplicated arms") {
  npjive::Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    DiscreteWorld world = npjive::random_world(rng, 4, 3, true);
    world.cond_pmf.row(1) = world.cond_pmf.row(0);
    CHECK(npjive::check_id_equiv(world));
  }
}

TEST_CASE("population risk vanishes exactly at arm-consistent hypotheses") {
  npjive::Rng rng(7);
  const DiscreteWorld world = npjive::random_world(rng, 2, 3, false);
  CHECK(npjive::population_risk(world, world.outcome_mean) == 0.0);
  const npjive::CrossfoldExpectation e =
      npjive::enumerate_crossfold_expectation(world, world.outcome_mean, 1);
  CHECK(std::abs(e.crossfold) <= 1e-13);
}

TEST_CASE("hand enumeration on the K=1, M=2, n_per_fold=1 world") {
  const DiscreteWorld world = two_point_world();
  Eigen::VectorXd h(2);
  h << 1.0, 1.0;
  // residual means: E[Y - h | A] = 0.5*0 + 0.5*2 - 1 = 0; the cross-fold
  // estimator is unbiased so its expectation is (T(h - ybar))^2 / 2 = 0
  const npjive::CrossfoldExpectation e = npjive::enumerate_crossfold_expectation(world, h, 1);
  CHECK(e.crossfold == doctest::Approx(0.0).epsilon(1e-14));
  // plug-in picks up Var(Y - h | A)/n with n = 2:
  // Var = E[(Y-1)^2] - 0 = 0.5*(0-1)^2 + 0.5*(2-1)^2 + 0.09 = 1.09
  CHECK(e.plugin == doctest::Approx((1.0 + 0.3 * 0.3) / 2.0 / 2.0).epsilon(1e-12));
}

TEST_CASE("enumeration matches the population risk and the bias formula exactly") {
  npjive::Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(3));
    const int m = 2 + static_cast<int>(rng.below(2));
    const int n_per_fold = 1 + static_cast<int>(rng.below(2));
    const DiscreteWorld world = npjive::random_world(rng, k, m);
    Eigen::VectorXd h(m);
    for (int j = 0; j < m; ++j) h(j) = rng.uniform(-1.0, 1.0);
    const npjive::CrossfoldExpectation e =
        npjive::enumerate_crossfold_expectation(world, h, n_per_fold);
    const double r1 = npjive::population_risk(world, h);
    CHECK(std::abs(e.crossfold - r1) <= 1e-12);
    CHECK(std::abs(e.plugin - r1 -
                   npjive::plugin_bias_formula(world, h, 2 * n_per_fold)) <= 1e-10);
  }
}

TEST_CASE("enumeration guard rejects oversized worlds") {
  npjive::Rng rng(9);
  const DiscreteWorld world = npjive::random_world(rng, 3, 8, false);
  CHECK_THROWS_AS(
      npjive::enumerate_crossfold_expectation(world, Eigen::VectorXd::Zero(8), 4),
      npjive::InputError);
}

TEST_CASE("mixed bias vanishes when either nuisance is exact") {
  npjive::Rng rng(10);
  const DiscreteWorld world = npjive::random_identified_world(rng, 3, 4);
  const npjive::RieszNuisances nuis = npjive::riesz_and_nuisances(world);
  REQUIRE(nuis.identified);
  Eigen::VectorXd bump = Eigen::VectorXd::Zero(4);
  bump << 0.7, -0.2, 0.4, -0.9;

  const auto at_h = npjive::mixed_bias_check(world, nuis.h_dagger, *nuis.xi + bump);
  CHECK(at_h.lhs <= 1e-12);
  const auto at_xi = npjive::mixed_bias_check(world, nuis.h_dagger + bump, *nuis.xi);
  CHECK(at_xi.lhs <= 1e-12);
}

TEST_CASE("mixed bias inequality holds across random perturbations") {
  npjive::Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const DiscreteWorld world = npjive::random_identified_world(
        rng, 2 + static_cast<int>(rng.below(3)), 2 + static_cast<int>(rng.below(3)));
    const npjive::RieszNuisances nuis = npjive::riesz_and_nuisances(world);
    REQUIRE(nuis.identified);
    for (int inner = 0; inner < 20; ++inner) {
      Eigen::VectorXd h = nuis.h_dagger;
      Eigen::VectorXd xi = *nuis.xi;
      for (int j = 0; j < h.size(); ++j) {
        h(j) += rng.normal() * 1.5;
        xi(j) += rng.normal() * 1.5;
      }
      const auto check = npjive::mixed_bias_check(world, h, xi);
      CHECK(check.lhs <= check.rhs + 1e-10);
    }
  }
}

TEST_CASE("mixed_bias_check requires identification") {
  DiscreteWorld world = two_point_world();
  world.novel_pmf << 0.9, 0.1;
  CHECK_THROWS_AS(
      npjive::mixed_bias_check(world, world.outcome_mean, world.outcome_mean),
      npjive::InputError);
}

TEST_CASE("psi inequality holds on identified and unidentified worlds") {
  npjive::Rng rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 1 + static_cast<int>(rng.below(4));
    const int m = 2 + static_cast<int>(rng.below(4));
    const DiscreteWorld world = trial % 2 == 0
                                    ? npjive::random_identified_world(rng, k, m)
                                    : npjive::random_world(rng, k, m);
    const npjive::PsiInequalityCheck check = npjive::psi_inequality_check(world);
    CHECK(check.lhs <= check.eps_k * check.delta_k + 1e-10);
  }
}

TEST_CASE("the oracle battery passes at its defaults") {
  npjive::OracleBatteryConfig cfg;
  cfg.unbiasedness_worlds = 10;
  cfg.unbiasedness_hypotheses = 5;
  cfg.rank_worlds = 100;
  cfg.mixed_bias_worlds = 10;
  cfg.mixed_bias_pairs = 10;
  cfg.psi_worlds = 10;
  const npjive::OracleBatteryReport report = npjive::run_oracle_battery(cfg);
  for (const auto& line : report.lines) {
    INFO(line.name, ": ", line.detail);
    CHECK(line.pass);
  }
}
