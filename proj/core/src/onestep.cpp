#include "npjive/onestep.hpp"

#include <cmath>

#include "npjive/rng.hpp"

namespace npjive {

namespace {

constexpr double kWaldZ = 1.96;

double sample_variance(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n < 2) throw InputError("sample variance needs at least 2 observations");
  const double mean = values.mean();
  return (values.array() - mean).square().sum() / static_cast<double>(n - 1);
}

void check_provenance(const std::optional<std::vector<int>>& folds_seen,
                      const char* which) {
  if (!folds_seen) return;  // hand-built nuisances carry no tags
  for (const int v : *folds_seen)
    if (v >= 2)
      throw InputError(std::string(which) +
                       " nuisance was trained on fold " + std::to_string(v) +
                       "; one-step correction requires folds {0,1} only");
}

struct CorrectionTerms {
  Eigen::VectorXd values;  // one per fold-2 pair
  double scale = 0.0;      // 4/N
};

CorrectionTerms correction_terms(const RkhsFunction& h, const DebiasFunction& debias,
                                 const HistoricalDataset& data,
                                 const FoldPairing& pairing) {
  data.validate();
  if (data.num_folds != 4)
    throw InputError("one-step correction needs a 4-fold assignment");
  check_provenance(h.folds_seen, "primary");
  std::visit([](const auto& d) { check_provenance(d.folds_seen, "debiasing"); }, debias);

  const Eigen::Index n_pairs = static_cast<Eigen::Index>(pairing.pairs.size());
  if (n_pairs * 4 != data.rows())
    throw InputError("pairing does not cover fold 2");
  CorrectionTerms out;
  out.values.resize(n_pairs);
  out.scale = 4.0 / static_cast<double>(data.rows());
  for (Eigen::Index p = 0; p < n_pairs; ++p) {
    const auto [i, j] = pairing.pairs[static_cast<std::size_t>(p)];
    if (i < 0 || i >= data.rows() || j < 0 || j >= data.rows())
      throw InputError("pairing row index out of range");
    if (data.fold[static_cast<std::size_t>(i)] != 2 ||
        data.fold[static_cast<std::size_t>(j)] != 3)
      throw InputError("pairing must map fold-2 rows to fold-3 rows");
    if (data.arm[static_cast<std::size_t>(i)] != data.arm[static_cast<std::size_t>(j)])
      throw InputError("pairing must stay within an arm");
    const double residual = data.Y(j) - h.value(data.S.row(j));
    const double weight =
        std::visit([&](const auto& d) -> double {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, RkhsFunction>) {
            return d.value(data.S.row(i));
          } else {
            return d.weight_for_arm(data.arm[static_cast<std::size_t>(i)]);
          }
        }, debias);
    out.values(p) = weight * residual;
  }
  return out;
}

}  // namespace

FoldPairing pair_folds(const HistoricalDataset& data, std::uint64_t seed) {
  data.validate();
  if (data.num_folds != 4) throw InputError("pair_folds needs a 4-fold assignment");
  FoldPairing pairing;
  const std::vector<std::vector<int>> by_arm = rows_by_arm(data);
  for (int a = 0; a < data.num_arms; ++a) {
    std::vector<int> fold2, fold3;
    for (const int i : by_arm[static_cast<std::size_t>(a)]) {
      if (data.fold[static_cast<std::size_t>(i)] == 2) fold2.push_back(i);
      if (data.fold[static_cast<std::size_t>(i)] == 3) fold3.push_back(i);
    }
    if (fold2.size() != fold3.size())
      throw InputError("pair_folds: fold-2 and fold-3 cells differ in size");
    Rng rng = Rng::derive(seed, {0x70616972ULL, static_cast<std::uint64_t>(a)});
    rng.shuffle(fold3);
    for (std::size_t p = 0; p < fold2.size(); ++p)
      pairing.pairs.emplace_back(fold2[p], fold3[p]);
  }
  return pairing;
}

ThetaEstimate one_step_theta(const RkhsFunction& h, const DebiasFunction& debias,
                             const HistoricalDataset& data, const NovelDataset& novel,
                             const FoldPairing& pairing) {
  novel.validate();
  const Eigen::VectorXd h_new = evaluate(h, novel.S);
  const CorrectionTerms corr = correction_terms(h, debias, data, pairing);

  ThetaEstimate est;
  est.theta = h_new.mean() + corr.scale * corr.values.sum();
  // Variances are zero when not estimable from a single observation;
  // variance_components enforces the strict contract.
  est.sigma1_sq = h_new.size() >= 2 ? sample_variance(h_new) : 0.0;
  est.sigma2_sq = corr.values.size() >= 2 ? sample_variance(corr.values) : 0.0;
  const double n_new = static_cast<double>(novel.rows());
  const double quarter = static_cast<double>(data.rows()) / 4.0;
  est.se = std::sqrt(est.sigma1_sq / n_new + est.sigma2_sq / quarter);
  est.ci_low = est.theta - kWaldZ * est.se;
  est.ci_high = est.theta + kWaldZ * est.se;
  est.n_eff = static_cast<int>(std::min(n_new, quarter));
  return est;
}

std::pair<double, double> variance_components(const RkhsFunction& h,
                                              const DebiasFunction& debias,
                                              const HistoricalDataset& data,
                                              const NovelDataset& novel,
                                              const FoldPairing& pairing) {
  novel.validate();
  if (novel.rows() < 2)
    throw InputError("variance_components: need at least 2 novel observations");
  const Eigen::VectorXd h_new = evaluate(h, novel.S);
  const CorrectionTerms corr = correction_terms(h, debias, data, pairing);
  if (corr.values.size() < 2)
    throw InputError("variance_components: need at least 2 fold pairs");
  return {sample_variance(h_new), sample_variance(corr.values)};
}

ThetaEstimate plug_in_functional(const RkhsFunction& h, const NovelDataset& novel) {
  novel.validate();
  if (novel.rows() < 2)
    throw InputError("plug_in_functional: need at least 2 novel observations");
  const Eigen::VectorXd h_new = evaluate(h, novel.S);
  ThetaEstimate est;
  est.theta = h_new.mean();
  est.sigma1_sq = sample_variance(h_new);
  est.sigma2_sq = 0.0;
  est.se = std::sqrt(est.sigma1_sq / static_cast<double>(novel.rows()));
  est.ci_low = est.theta - kWaldZ * est.se;
  est.ci_high = est.theta + kWaldZ * est.se;
  est.n_eff = novel.rows();
  return est;
}

}  // namespace npjive
