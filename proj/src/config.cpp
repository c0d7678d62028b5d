#include "clab/config.hpp"

#include "clab/errors.hpp"
#include "clab/rng.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace clab {

void require_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                  const std::string& where) {
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const auto& a : allowed)
            known = known || key == a;
        if (!known)
            throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
}

GroupBackend parse_backend(const nlohmann::json& spec, const std::string& where) {
    require_keys(spec, {"kind", "rank", "orders"}, where);
    if (!spec.contains("kind"))
        throw ConfigError(where + ": missing \"kind\"");
    std::string kind = spec.at("kind").get<std::string>();
    if (kind == "free_group") {
        if (!spec.contains("rank"))
            throw ConfigError(where + ": free_group needs \"rank\"");
        return GroupBackend::free_group(spec.at("rank").get<int>());
    }
    if (kind == "free_product_cyclics") {
        if (!spec.contains("orders"))
            throw ConfigError(where + ": free_product_cyclics needs \"orders\"");
        std::vector<std::uint32_t> orders;
        for (const auto& o : spec.at("orders"))
            orders.push_back(o.get<std::uint32_t>());
        return GroupBackend::free_product_of_cyclics(std::move(orders));
    }
    if (kind == "integer_line")
        return GroupBackend::integer_line();
    throw ConfigError(where + ": unknown backend kind \"" + kind + "\"");
}

MeasurePtr parse_measure(const nlohmann::json& spec, const GroupBackend& backend,
                         const std::string& where) {
    require_keys(spec, {"family", "support", "support_file", "p", "q", "base"}, where);
    if (!spec.contains("family"))
        throw ConfigError(where + ": missing \"family\"");
    std::string family = spec.at("family").get<std::string>();
    try {
        if (family == "uniform_generators")
            return make_uniform_generators(backend);
        if (family == "finite_table") {
            std::vector<std::pair<GroupElement, double>> atoms;
            if (spec.contains("support")) {
                for (const auto& entry : spec.at("support")) {
                    if (!entry.is_array() || entry.size() != 2)
                        throw ConfigError(where + ": support entries are [word, prob]");
                    atoms.emplace_back(backend.parse(entry.at(0).get<std::string>()),
                                       entry.at(1).get<double>());
                }
            } else if (spec.contains("support_file")) {
                std::ifstream in(spec.at("support_file").get<std::string>());
                if (!in)
                    throw ConfigError(where + ": cannot open support file");
                std::string word;
                double prob;
                while (in >> word >> prob)
                    atoms.emplace_back(backend.parse(word), prob);
            } else {
                throw ConfigError(where + ": finite_table needs \"support\"");
            }
            return make_finite_table(backend, std::move(atoms));
        }
        if (family == "geometric_length") {
            if (!spec.contains("p"))
                throw ConfigError(where + ": geometric_length needs \"p\"");
            return make_geometric_length(backend, spec.at("p").get<double>());
        }
        if (family == "lazy") {
            if (!spec.contains("q") || !spec.contains("base"))
                throw ConfigError(where + ": lazy needs \"q\" and \"base\"");
            return make_lazy(spec.at("q").get<double>(),
                             parse_measure(spec.at("base"), backend, where + ".base"));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    throw ConfigError(where + ": unknown measure family \"" + family + "\"");
}

Cocycle ExperimentConfig::make_cocycle() const {
    std::string kind = cocycle_kind.value_or("length");
    if (kind == "length")
        return Cocycle::length(backend);
    if (kind == "additive_sign")
        return additive_sign_cocycle();
    if (kind == "brooks")
        return brooks_counting_cocycle(backend, brooks_pattern);
    if (kind == "green_length")
        throw ConfigError("green_length cocycles are constructed by their suite");
    throw ConfigError("unknown cocycle kind \"" + kind + "\"");
}

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

ExperimentConfig parse_config(const nlohmann::json& doc) {
    require_keys(doc,
                 {"experiment", "suite", "seed", "workers", "out", "backend", "measure",
                  "measure2", "cocycle", "params"},
                 "config");
    ExperimentConfig cfg;
    if (!doc.contains("experiment"))
        throw ConfigError("config: missing \"experiment\" id");
    cfg.experiment = doc.at("experiment").get<std::string>();
    if (!doc.contains("suite"))
        throw ConfigError("config: missing \"suite\"");
    cfg.suite = doc.at("suite").get<std::string>();
    if (!doc.contains("seed"))
        throw ConfigError("config: missing \"seed\" (no wall-clock seeding)");
    cfg.seed = doc.at("seed").get<std::uint64_t>();
    cfg.workers = doc.value("workers", 1);
    if (cfg.workers < 1)
        throw ConfigError("config: workers must be >= 1");
    cfg.out_dir = doc.value("out", std::string{});

    if (!doc.contains("backend"))
        throw ConfigError("config: missing \"backend\"");
    cfg.backend = parse_backend(doc.at("backend"), "config.backend");
    if (!doc.contains("measure"))
        throw ConfigError("config: missing \"measure\"");
    cfg.measure = parse_measure(doc.at("measure"), cfg.backend, "config.measure");
    if (doc.contains("measure2"))
        cfg.measure2 = parse_measure(doc.at("measure2"), cfg.backend, "config.measure2");

    if (doc.contains("cocycle")) {
        const auto& cs = doc.at("cocycle");
        require_keys(cs, {"kind", "pattern", "horizon", "trials", "budget_steps"},
                     "config.cocycle");
        if (!cs.contains("kind"))
            throw ConfigError("config.cocycle: missing \"kind\"");
        cfg.cocycle_kind = cs.at("kind").get<std::string>();
        cfg.brooks_pattern = cs.value("pattern", "ab");
        cfg.green_cocycle_params = cs;
        // Validate eagerly so bad kinds fail before any sampling.
        if (*cfg.cocycle_kind != "green_length")
            (void)cfg.make_cocycle();
    }
    cfg.params = doc.value("params", nlohmann::json::object());
    if (!cfg.params.is_object())
        throw ConfigError("config.params: expected an object");

    // Fingerprint over the canonical document without execution-only fields.
    nlohmann::json canon = doc;
    canon.erase("workers");
    canon.erase("out");
    canon.erase("seed");
    cfg.fingerprint = hash_hex(fnv1a64(canon.dump()));
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

std::size_t param_size(const nlohmann::json& params, const std::string& key,
                       std::size_t fallback) {
    if (!params.contains(key))
        return fallback;
    return params.at(key).get<std::size_t>();
}

double param_double(const nlohmann::json& params, const std::string& key, double fallback) {
    if (!params.contains(key))
        return fallback;
    return params.at(key).get<double>();
}

std::vector<std::size_t> param_grid(const nlohmann::json& params, const std::string& key,
                                    std::vector<std::size_t> fallback) {
    if (!params.contains(key))
        return fallback;
    std::vector<std::size_t> out;
    for (const auto& v : params.at(key))
        out.push_back(v.get<std::size_t>());
    if (out.empty())
        throw ConfigError("config.params." + key + ": empty grid");
    return out;
}

} // namespace clab
