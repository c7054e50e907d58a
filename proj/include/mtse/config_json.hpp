#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "mtse/backtest.hpp"
#include "mtse/simulation.hpp"

namespace mtse {

using Json = nlohmann::json;

/// Overrides on top of the defaults; unknown keys are rejected.
Tolerances tolerances_from_json(const Json& j);
Json to_json(const Tolerances& tol);

/// Experiment config. A "preset" key selects one of the built-in studies,
/// whose fields are then overridden by the remaining keys. Relative paths
/// resolve against `base_dir`.
ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir);
Json to_json(const ExperimentConfig& c);
Json to_json(const ExperimentReport& r);

/// Target spec: {"kind":"identity"} | {"kind":"blocks","sizes":[...]} |
/// {"kind":"sectors","labels":[...]} | {"kind":"file","path":...}. A file holds
/// N stacked p x p matrices as CSV rows, orthonormalized on load.
TargetSet targets_from_json(const Json& spec, Eigen::Index p,
                            const std::filesystem::path& base_dir);

Json to_json(const ShrinkageResult& r);
Json to_json(const BacktestReport& r);

}  // namespace mtse
