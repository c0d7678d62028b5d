#include "clab/report.hpp"

#include <charconv>
#include <cmath>

#include <json.hpp>

namespace clab {

std::string format_double(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

std::string csv_header() {
    return "experiment,fingerprint,estimator,cocycle,n,statistic,value,stderr,samples,seed";
}

std::string csv_line(const CsvRow& row) {
    std::string out;
    out.reserve(128);
    out += row.experiment;
    out += ',';
    out += row.fingerprint;
    out += ',';
    out += row.estimator;
    out += ',';
    out += row.cocycle;
    out += ',';
    out += row.n.empty() ? "-" : row.n;
    out += ',';
    out += row.statistic;
    out += ',';
    out += format_double(row.value);
    out += ',';
    out += format_double(row.se);
    out += ',';
    out += std::to_string(row.samples);
    out += ',';
    out += std::to_string(row.seed);
    return out;
}

Criterion criterion_le(std::string name, double value, double threshold) {
    Criterion c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.comparator = "<=";
    c.pass = value <= threshold;
    return c;
}

Criterion criterion_ge(std::string name, double value, double threshold) {
    Criterion c;
    c.name = std::move(name);
    c.value = value;
    c.threshold = threshold;
    c.comparator = ">=";
    c.pass = value >= threshold;
    return c;
}

Criterion criterion_bool(std::string name, bool pass) {
    Criterion c;
    c.name = std::move(name);
    c.value = pass ? 1 : 0;
    c.threshold = 1;
    c.comparator = "bool";
    c.pass = pass;
    return c;
}

std::string summary_json(const std::string& experiment, const std::string& fingerprint,
                         const std::vector<Criterion>& criteria, bool incomplete,
                         const std::string& error) {
    nlohmann::ordered_json doc;
    doc["experiment"] = experiment;
    doc["fingerprint"] = fingerprint;
    doc["criteria"] = nlohmann::ordered_json::array();
    bool all = true;
    for (const auto& c : criteria) {
        nlohmann::ordered_json jc;
        jc["name"] = c.name;
        jc["value"] = format_double(c.value);
        jc["threshold"] = format_double(c.threshold);
        jc["comparator"] = c.comparator;
        jc["pass"] = c.pass;
        doc["criteria"].push_back(jc);
        all = all && c.pass;
    }
    doc["pass"] = all && !incomplete;
    doc["incomplete"] = incomplete;
    if (!error.empty())
        doc["error"] = error;
    return doc.dump(2) + "\n";
}

} // namespace clab
