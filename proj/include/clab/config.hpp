#pragma once

#include "clab/measures.hpp"
#include "clab/walk.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace clab {

/// A fully validated experiment declaration. Unknown keys are rejected with
/// their path; the fingerprint hashes the canonical document minus
/// execution-only fields (workers, output directory, dumps), so replays of
/// one experiment are recognizable across worker counts.
struct ExperimentConfig {
    std::string experiment;
    std::string suite;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string out_dir;
    nlohmann::json params; // suite-specific block, validated by the suite

    GroupBackend backend = GroupBackend::free_group(2);
    MeasurePtr measure;
    MeasurePtr measure2; // optional second measure (curves, pairs)
    std::optional<std::string> cocycle_kind;
    std::string brooks_pattern = "ab";
    nlohmann::json green_cocycle_params; // when cocycle is green_length

    std::string fingerprint;

    /// Builds the configured cocycle (length by default). Green-length
    /// cocycles need runtime state and are constructed by the suites.
    Cocycle make_cocycle() const;
};

ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

GroupBackend parse_backend(const nlohmann::json& spec, const std::string& where);
MeasurePtr parse_measure(const nlohmann::json& spec, const GroupBackend& backend,
                         const std::string& where);

/// Rejects keys outside `allowed`, naming the offending key and its path.
void require_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                  const std::string& where);

/// Helpers for suite parameter blocks (type-checked, with defaults).
std::size_t param_size(const nlohmann::json& params, const std::string& key,
                       std::size_t fallback);
double param_double(const nlohmann::json& params, const std::string& key, double fallback);
std::vector<std::size_t> param_grid(const nlohmann::json& params, const std::string& key,
                                    std::vector<std::size_t> fallback);

} // namespace clab
