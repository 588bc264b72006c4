#pragma once

#include <json.hpp>
#include <string>

#include "stochstab/bounds.hpp"
#include "stochstab/experiments.hpp"

namespace stochstab {

using Json = nlohmann::json;

/// Cocycle definition from its JSON document:
///   {"d": ..., "driver": {...}, "generator": {...}}.
/// Throws ConfigError naming the offending field.
CocycleSystem cocycle_from_json(const Json& j);

/// Full run configuration:
///   {"cocycle": {...}, "experiment": {...}, "thresholds": {...}, "run": {...}}.
struct RunConfig {
    Json raw;           // echoed verbatim into output envelopes
    Json cocycle_spec;  // the cocycle subtree (hashed)
    ExperimentConfig experiment;
};

RunConfig parse_run_config(const Json& j);
RunConfig load_run_config(const std::string& path);

/// Content hash of the canonically serialized cocycle spec (FNV-1a, 64-bit).
std::string cocycle_hash(const Json& cocycle_spec);

/// CSV cell formatting: 12 significant digits, -inf as the string "-inf".
std::string csv_double(double x);

std::string table_to_csv(const ConvergenceTable& table);
void write_text_file(const std::string& path, const std::string& contents);

Json to_json(const Subspace& s);
Json to_json(const LyapunovGroup& g);
Json to_json(const SpectrumReport& r);
Json to_json(const SplittingReport& r);
Json to_json(const ConvergenceTable& t);
Json to_json(const IntegralBoundReport& r);
Json to_json(const MonteCarloBoundReport& r);
Json to_json(const GlueCostReport& r);
Json to_json(const ExponentReport& r);
Json to_json(const SpaceReport& r);
Json to_json(const GrassmannReport& r);
Json to_json(const CensusReport& r);

/// Output envelope carrying the config echo, seed, and cocycle hash.
Json make_envelope(const RunConfig& cfg, Json results);

}  // namespace stochstab
