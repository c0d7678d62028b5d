#pragma once

#include "clab/config.hpp"
#include "clab/parallel.hpp"
#include "clab/report.hpp"

#include <string>
#include <vector>

namespace clab {

struct SuiteResult {
    std::vector<CsvRow> rows;
    std::vector<Criterion> criteria;
    /// Two-column plot-data files: name -> contents.
    std::vector<std::pair<std::string, std::string>> plots;
    /// A budget ran out mid-suite: rows hold the partial results and the
    /// summary carries the incomplete flag (nonzero exit).
    bool incomplete = false;
    std::string error;
};

using SuiteRunner = SuiteResult (*)(const ExperimentConfig&, const Parallel&);

struct SuiteInfo {
    std::string name;
    std::string summary;
    std::string description;
    SuiteRunner run = nullptr;
};

/// The eight built-in composite suites.
const std::vector<SuiteInfo>& suite_registry();

/// Finds a runnable command: a registry suite or the basic "speed"
/// estimator command. Returns nullptr when unknown.
const SuiteInfo* find_suite(const std::string& name);

/// Closest known names, for unknown-suite diagnostics.
std::vector<std::string> suggest_suites(const std::string& name);

/// Formats a trajectory dump: one line "j X_j Z_j Q_j" per step.
std::string trajectory_dump(const ExperimentConfig& cfg, std::size_t steps);

} // namespace clab
