#pragma once

#include <json.hpp>
#include <string>

#include "npjive/debias.hpp"
#include "npjive/npjive.hpp"
#include "npjive/simulate.hpp"
#include "npjive/sweep.hpp"

namespace npjive::config {

using nlohmann::json;

// Strict parsers: unknown keys raise InputError so config typos surface.
FitConfig parse_fit_config(const json& j);
DebiasConfig parse_debias_config(const json& j);
ContinuousDgpParams parse_continuous_params(const json& j);
ExactIdDgpParams parse_exact_id_params(const json& j);
SweepConfig parse_sweep_config(const json& j);

json load_json_file(const std::string& path);

json estimate_to_json(const ThetaEstimate& est);

}  // namespace npjive::config
