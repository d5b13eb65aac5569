#include "npjive/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "npjive/rng.hpp"

namespace npjive {

double structural_h(double s) { return s + std::sin(s) + (s > 0.25 ? 1.0 : 0.0); }

void ContinuousDgpParams::validate() const {
  if (num_arms < 1 || per_arm < 1 || novel_rows < 1)
    throw InputError("continuous dgp: sizes must be positive");
  if (!(sigma_gamma >= 0.0) || !(sigma_u >= 0.0))
    throw InputError("continuous dgp: scales must be nonnegative");
  if (!std::isfinite(gamma_new)) throw InputError("continuous dgp: gamma_new must be finite");
}

void ExactIdDgpParams::validate() const {
  if (num_arms < 1 || per_arm < 1 || novel_rows < 1)
    throw InputError("exact-id dgp: sizes must be positive");
  const std::size_t m = support.size();
  if (m < 1) throw InputError("exact-id dgp: empty support");
  for (std::size_t i = 1; i < m; ++i)
    if (!(support[i] > support[i - 1]))
      throw InputError("exact-id dgp: support points must be strictly increasing");
  if (dirichlet_concentration.size() != m || mu_new.size() != m)
    throw InputError("exact-id dgp: weight vectors must match the support size");
  double total = 0.0;
  for (const double p : mu_new) {
    if (p < 0.0) throw InputError("exact-id dgp: mu_new entries must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InputError("exact-id dgp: mu_new must sum to 1");
  if (confounder_halfwidth < 0.0)
    throw InputError("exact-id dgp: confounder halfwidth must be nonnegative");
  bool any_inf = false, all_inf = true;
  for (const double c : dirichlet_concentration) {
    if (std::isinf(c)) any_inf = true; else all_inf = false;
    if (!(c > 0.0)) throw InputError("exact-id dgp: concentration entries must be positive");
  }
  if (any_inf && !all_inf)
    throw InputError("exact-id dgp: mixed finite/infinite concentration is not supported");
}

namespace {

constexpr double kQuadTol = 1e-8;

// Adaptive Simpson on [a, b]; recursion depth guard raises NumericError.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double fa, double fm, double fb, double whole, double tol,
                        int depth) {
  if (depth > 60) throw NumericError("quadrature did not converge");
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  if (!(b > a)) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a), fm = f(m), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 0);
}

// Integral of f over [a, b] split at the structural jump point when inside.
double integrate_split(const std::function<double(double)>& f, double a, double b,
                       double tol) {
  constexpr double kJump = 0.25;
  if (a < kJump && kJump < b)
    return integrate(f, a, kJump, tol / 2.0) + integrate(f, kJump, b, tol / 2.0);
  return integrate(f, a, b, tol);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Density of Uniform(center-1/2, center+1/2) + N(0, sigma^2).
double uniform_normal_density(double s, double center, double sigma) {
  return normal_cdf((s - center + 0.5) / sigma) - normal_cdf((s - center - 0.5) / sigma);
}

// Mean of structural_h over Uniform(lo, hi).
double structural_mean_uniform(double lo, double hi) {
  if (hi == lo) return structural_h(lo);
  const auto f = [](double s) { return structural_h(s); };
  return integrate_split(f, lo, hi, kQuadTol * (hi - lo)) / (hi - lo);
}

}  // namespace

double theta_star_quadrature(const ContinuousDgpParams& params) {
  params.validate();
  const double c = params.gamma_new;
  if (params.sigma_u == 0.0) return structural_mean_uniform(c - 0.5, c + 0.5);
  const double sigma = params.sigma_u;
  const auto f = [c, sigma](double s) {
    return structural_h(s) * uniform_normal_density(s, c, sigma);
  };
  const double lo = c - 0.5 - 9.0 * sigma;
  const double hi = c + 0.5 + 9.0 * sigma;
  return integrate_split(f, lo, hi, kQuadTol);
}

double theta_star_quadrature(const ExactIdDgpParams& params) {
  params.validate();
  double theta = 0.0;
  const double w = params.confounder_halfwidth;
  for (std::size_t m = 0; m < params.support.size(); ++m) {
    if (params.mu_new[m] == 0.0) continue;
    const double s = params.support[m];
    theta += params.mu_new[m] * structural_mean_uniform(s - w, s + w);
  }
  return theta;
}

namespace {

HistoricalDataset empty_historical(int num_arms, int per_arm) {
  HistoricalDataset data;
  data.num_arms = num_arms;
  data.per_arm = per_arm;
  const int rows = num_arms * per_arm;
  data.S.resize(rows, 1);
  data.Y.resize(rows);
  data.arm.resize(static_cast<std::size_t>(rows));
  data.arm_labels.resize(static_cast<std::size_t>(num_arms));
  for (int a = 0; a < num_arms; ++a)
    data.arm_labels[static_cast<std::size_t>(a)] = std::to_string(a);
  return data;
}

}  // namespace

SimulatedExperiment dgp_continuous(const ContinuousDgpParams& params) {
  params.validate();
  SimulatedExperiment out;
  out.historical = empty_historical(params.num_arms, params.per_arm);
  out.historical.meta = {{"sigma_gamma", params.sigma_gamma},
                         {"gamma_new", params.gamma_new},
                         {"sigma_u", params.sigma_u},
                         {"seed", static_cast<double>(params.seed)}};

  for (int a = 0; a < params.num_arms; ++a) {
    Rng rng = Rng::derive(params.seed, {0x636f6e74ULL, static_cast<std::uint64_t>(a)});
    const double gamma_a = rng.normal(0.0, params.sigma_gamma);
    for (int u = 0; u < params.per_arm; ++u) {
      const int i = a * params.per_arm + u;
      const double confounder = rng.normal(0.0, params.sigma_u);
      const double s = rng.uniform(gamma_a - 0.5, gamma_a + 0.5) + confounder;
      out.historical.S(i, 0) = s;
      out.historical.Y(i) = structural_h(s) - confounder;
      out.historical.arm[static_cast<std::size_t>(i)] = a;
    }
  }

  Rng rng = Rng::derive(params.seed,
                        {0x636f6e74ULL, static_cast<std::uint64_t>(params.num_arms)});
  out.novel.S.resize(params.novel_rows, 1);
  for (int i = 0; i < params.novel_rows; ++i) {
    const double confounder = rng.normal(0.0, params.sigma_u);
    out.novel.S(i, 0) =
        rng.uniform(params.gamma_new - 0.5, params.gamma_new + 0.5) + confounder;
  }
  out.theta_true = theta_star_quadrature(params);
  return out;
}

SimulatedExperiment dgp_exact_id(const ExactIdDgpParams& params) {
  params.validate();
  const std::size_t m = params.support.size();
  const bool degenerate_weights = std::isinf(params.dirichlet_concentration[0]);
  std::vector<double> uniform_mu(m, 1.0 / static_cast<double>(m));

  SimulatedExperiment out;
  out.historical = empty_historical(params.num_arms, params.per_arm);
  out.historical.meta = {{"confounder_halfwidth", params.confounder_halfwidth},
                         {"outcome_confounder_scale", params.outcome_confounder_scale},
                         {"seed", static_cast<double>(params.seed)}};

  for (int a = 0; a < params.num_arms; ++a) {
    Rng rng = Rng::derive(params.seed, {0x65786964ULL, static_cast<std::uint64_t>(a)});
    const std::vector<double> mu_a =
        degenerate_weights ? uniform_mu : rng.dirichlet(params.dirichlet_concentration);
    for (int u = 0; u < params.per_arm; ++u) {
      const int i = a * params.per_arm + u;
      const double confounder =
          rng.uniform(-params.confounder_halfwidth, params.confounder_halfwidth);
      const double s = params.support[static_cast<std::size_t>(rng.discrete(mu_a))] +
                       confounder;
      out.historical.S(i, 0) = s;
      out.historical.Y(i) = structural_h(s) - params.outcome_confounder_scale * confounder;
      out.historical.arm[static_cast<std::size_t>(i)] = a;
    }
  }

  Rng rng = Rng::derive(params.seed,
                        {0x65786964ULL, static_cast<std::uint64_t>(params.num_arms)});
  out.novel.S.resize(params.novel_rows, 1);
  for (int i = 0; i < params.novel_rows; ++i) {
    const double confounder =
        rng.uniform(-params.confounder_halfwidth, params.confounder_halfwidth);
    out.novel.S(i, 0) =
        params.support[static_cast<std::size_t>(rng.discrete(params.mu_new))] + confounder;
  }
  out.theta_true = theta_star_quadrature(params);
  return out;
}

}  // namespace npjive
