#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "whmc/estimators.hpp"
#include "whmc/models.hpp"
#include "whmc/payoffs.hpp"

// Config file schema, runners behind the CLI subcommands, and the artifact
// strings they produce. Everything here is deterministic given the config
// except wall-clock fields and the report timestamp.

namespace whmc::experiment {

struct Config {
    models::LevyModel model = models::LevyModel::brownian(0.0, 1.0);
    double t = 1.0;
    payoffs::Payoff payoff = payoffs::Payoff::lipschitz(payoffs::LipschitzKind::terminal);
    estimators::LevelPlan plan{};
    estimators::RunOptions run{};
};

// Strict parse: unknown keys, missing required fields, and out-of-domain
// values raise config_error.
Config parse_config(const std::string& json_text);
Config load_config_file(const std::string& path);

// Canonical (sorted-key) dump of the parsed config and its FNV-1a hash;
// reports embed the hash so artifacts can be traced to an exact setup.
std::string canonical_config_json(const Config& cfg);
std::uint64_t config_hash(const Config& cfg);

struct EstimateArtifacts {
    std::string report_json;
    std::string levels_csv; // level,n,M,mean,var,cost_units,wall_ms
};

EstimateArtifacts run_estimate(const Config& cfg);

struct ValidateArtifacts {
    bool all_passed = false;
    std::string report_json;
    std::string diagnostics_csv; // check,expected,observed,metric,threshold,pass
};

ValidateArtifacts run_validate(const Config& cfg);

struct RatesArtifacts {
    std::string report_json;
    std::string diagnostics_csv; // kind,method,rho,exponent,r2,provenance
};

RatesArtifacts run_rates(const Config& cfg);

} // namespace whmc::experiment
