#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace clab {

/// Shortest round-trip decimal rendering (std::to_chars); the same value
/// always prints the same bytes, which the determinism contract relies on.
std::string format_double(double x);

struct CsvRow {
    std::string experiment;
    std::string fingerprint;
    std::string estimator;
    std::string cocycle;
    std::string n; // grid value or "-"
    std::string statistic;
    double value = 0;
    double se = 0;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

std::string csv_header();
std::string csv_line(const CsvRow& row);

struct Criterion {
    std::string name;
    double value = 0;
    double threshold = 0;
    /// How value relates to threshold for a pass: "<=", ">=" or "bool"
    /// (value 1 passes, threshold ignored).
    std::string comparator = "<=";
    bool pass = false;
};

Criterion criterion_le(std::string name, double value, double threshold);
Criterion criterion_ge(std::string name, double value, double threshold);
Criterion criterion_bool(std::string name, bool pass);

/// {"experiment", "fingerprint", "criteria": [{name, value, threshold,
/// pass}...], "pass", "incomplete"} rendered with stable key order.
std::string summary_json(const std::string& experiment, const std::string& fingerprint,
                         const std::vector<Criterion>& criteria, bool incomplete,
                         const std::string& error = "");

} // namespace clab
