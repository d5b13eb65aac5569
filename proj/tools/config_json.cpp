#include "config_json.hpp"

#include <fstream>
#include <set>

namespace npjive::config {

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key))
      throw InputError(where + ": unknown key '" + key + "'");
}

template <typename T>
void read(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw InputError("config parse error in " + path + ": " + e.what());
  }
  return j;
}

FitConfig parse_fit_config(const json& j) {
  check_keys(j, {"lambda", "nu", "L", "seed", "jitter", "w"}, "fit config");
  FitConfig cfg;
  read(j, "lambda", cfg.lambda);
  read(j, "nu", cfg.nu);
  read(j, "L", cfg.dictionary_size);
  read(j, "seed", cfg.seed);
  read(j, "jitter", cfg.jitter);
  read(j, "w", cfg.w);
  cfg.validate();
  return cfg;
}

DebiasConfig parse_debias_config(const json& j) {
  check_keys(j, {"mu", "tau", "nu", "L", "seed", "jitter"}, "debias config");
  DebiasConfig cfg;
  read(j, "mu", cfg.mu);
  if (j.contains("tau")) cfg.tau = j.at("tau").get<double>();
  read(j, "nu", cfg.nu);
  read(j, "L", cfg.dictionary_size);
  read(j, "seed", cfg.seed);
  read(j, "jitter", cfg.jitter);
  cfg.validate();
  return cfg;
}

ContinuousDgpParams parse_continuous_params(const json& j) {
  check_keys(j, {"K", "n", "n_new", "sigma_gamma", "gamma_new", "sigma_u", "seed"},
             "continuous dgp");
  ContinuousDgpParams p;
  read(j, "K", p.num_arms);
  read(j, "n", p.per_arm);
  read(j, "n_new", p.novel_rows);
  read(j, "sigma_gamma", p.sigma_gamma);
  read(j, "gamma_new", p.gamma_new);
  read(j, "sigma_u", p.sigma_u);
  read(j, "seed", p.seed);
  p.validate();
  return p;
}

ExactIdDgpParams parse_exact_id_params(const json& j) {
  check_keys(j,
             {"K", "n", "n_new", "dirichlet", "support", "confounder_halfwidth",
              "outcome_confounder_scale", "mu_new", "seed"},
             "exact-id dgp");
  ExactIdDgpParams p;
  read(j, "K", p.num_arms);
  read(j, "n", p.per_arm);
  read(j, "n_new", p.novel_rows);
  read(j, "dirichlet", p.dirichlet_concentration);
  read(j, "support", p.support);
  read(j, "confounder_halfwidth", p.confounder_halfwidth);
  read(j, "outcome_confounder_scale", p.outcome_confounder_scale);
  read(j, "mu_new", p.mu_new);
  read(j, "seed", p.seed);
  p.validate();
  return p;
}

SweepConfig parse_sweep_config(const json& j) {
  check_keys(j,
             {"dgp", "K", "n", "n_new", "replications", "estimators", "fit", "debias",
              "dgp_params", "seed", "workers", "timings", "out", "svg"},
             "sweep config");
  SweepConfig cfg;
  const std::string dgp = j.value("dgp", std::string("continuous"));
  if (dgp == "continuous") {
    cfg.dgp = SweepConfig::Dgp::kContinuous;
  } else if (dgp == "exact-id") {
    cfg.dgp = SweepConfig::Dgp::kExactId;
  } else {
    throw InputError("sweep config: dgp must be 'continuous' or 'exact-id'");
  }
  read(j, "K", cfg.arm_grid);
  read(j, "n", cfg.n_grid);
  read(j, "n_new", cfg.novel_rows);
  read(j, "replications", cfg.replications);
  read(j, "estimators", cfg.estimators);
  if (j.contains("fit")) cfg.fit = parse_fit_config(j.at("fit"));
  if (j.contains("debias")) cfg.debias = parse_debias_config(j.at("debias"));
  if (j.contains("dgp_params")) {
    if (cfg.dgp == SweepConfig::Dgp::kContinuous)
      cfg.continuous = parse_continuous_params(j.at("dgp_params"));
    else
      cfg.exact_id = parse_exact_id_params(j.at("dgp_params"));
  }
  read(j, "seed", cfg.seed);
  read(j, "workers", cfg.workers);
  read(j, "timings", cfg.timings);
  read(j, "out", cfg.out_csv);
  read(j, "svg", cfg.out_svg);
  cfg.validate();
  return cfg;
}

json estimate_to_json(const ThetaEstimate& est) {
  return json{{"theta", est.theta},           {"se", est.se},
              {"ci_low", est.ci_low},         {"ci_high", est.ci_high},
              {"sigma1_sq", est.sigma1_sq},   {"sigma2_sq", est.sigma2_sq},
              {"n_eff", est.n_eff}};
}

}  // namespace npjive::config
