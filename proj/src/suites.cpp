#include "clab/suites.hpp"

#include "clab/errors.hpp"
#include "clab/estimators.hpp"
#include "clab/green.hpp"
#include "clab/sensitivity.hpp"
#include "clab/stats.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <tuple>
#include <cmath>
#include <sstream>

namespace clab {

namespace {

CsvRow row(const ExperimentConfig& cfg, const std::string& estimator,
           const std::string& cocycle, const std::string& n, const std::string& stat,
           double value, double se, std::size_t samples) {
    CsvRow r;
    r.experiment = cfg.experiment;
    r.fingerprint = cfg.fingerprint;
    r.estimator = estimator;
    r.cocycle = cocycle;
    r.n = n;
    r.statistic = stat;
    r.value = value;
    r.se = se;
    r.samples = samples;
    r.seed = cfg.seed;
    return r;
}

std::string two_column(const std::vector<std::pair<double, double>>& points) {
    std::string out;
    for (const auto& [x, y] : points) {
        out += format_double(x);
        out += ' ';
        out += format_double(y);
        out += '\n';
    }
    return out;
}

bool is_free_srw(const ExperimentConfig& cfg) {
    return cfg.backend.kind() == BackendKind::FreeGroup &&
           std::dynamic_pointer_cast<const FiniteTableMeasure>(cfg.measure) &&
           cfg.measure->fingerprint() ==
               make_uniform_generators(cfg.backend)->fingerprint();
}

double free_srw_speed(const ExperimentConfig& cfg) {
    double k = cfg.backend.rank();
    return (k - 1) / k;
}

double free_srw_green_per_unit(const ExperimentConfig& cfg) {
    return std::log(2.0 * cfg.backend.rank() - 1.0);
}

std::vector<std::pair<std::size_t, std::size_t>> param_pair_grid(
    const nlohmann::json& params, const std::string& key,
    std::vector<std::pair<std::size_t, std::size_t>> fallback) {
    if (!params.contains(key))
        return fallback;
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const auto& cell : params.at(key)) {
        if (!cell.is_array() || cell.size() != 2)
            throw ConfigError("config.params." + key + ": entries are [n, m]");
        out.emplace_back(cell.at(0).get<std::size_t>(), cell.at(1).get<std::size_t>());
    }
    return out;
}

std::vector<double> param_double_grid(const nlohmann::json& params, const std::string& key,
                                      std::vector<double> fallback) {
    if (!params.contains(key))
        return fallback;
    std::vector<double> out;
    for (const auto& v : params.at(key))
        out.push_back(v.get<double>());
    return out;
}

// ---------------------------------------------------------------------------

SuiteResult run_speed(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params, {"n", "samples", "tau_samples", "expected", "tolerance"},
                 "config.params");
    std::size_t n = param_size(cfg.params, "n", 1000);
    std::size_t samples = param_size(cfg.params, "samples", 10000);
    std::size_t tau_samples = param_size(cfg.params, "tau_samples", 2000);
    Cocycle c = cfg.make_cocycle();

    auto dev = estimate_deviation_constants(
        c, *cfg.measure, {{n / 10 + 1, n / 10 + 1}, {n / 4 + 1, n / 4 + 1}}, {1.0},
        tau_samples, cfg.seed, par);
    auto report = estimate_speed(c, *cfg.measure, n, samples, cfg.seed, par,
                                 dev.tau_at(1.0));

    SuiteResult out;
    out.rows.push_back(row(cfg, "speed", c.name(), std::to_string(n), "speed",
                           report.value, report.se, samples));
    out.rows.push_back(row(cfg, "speed", c.name(), std::to_string(n), "bracket_low",
                           report.speed_bracket->first, 0, samples));
    out.rows.push_back(row(cfg, "speed", c.name(), std::to_string(n), "bracket_high",
                           report.speed_bracket->second, 0, samples));
    out.rows.push_back(row(cfg, "speed", c.name(), std::to_string(n), "tau1_hat",
                           dev.tau_at(1.0), 0, tau_samples));

    if (cfg.params.contains("expected")) {
        double expected = cfg.params.at("expected").get<double>();
        double tol = param_double(cfg.params, "tolerance", 0.01);
        out.criteria.push_back(
            criterion_le("speed within tolerance of expected value",
                         std::abs(report.value - expected), tol));
    } else if (is_free_srw(cfg) && c.kind() == Cocycle::Kind::Length) {
        out.criteria.push_back(criterion_le("speed within 0.01 of (k-1)/k",
                                            std::abs(report.value - free_srw_speed(cfg)),
                                            0.01));
    }
    return out;
}

SuiteResult run_deviation(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params, {"grid", "thresholds", "samples", "min_rate", "max_spread"},
                 "config.params");
    bool green = cfg.cocycle_kind.value_or("length") == "green_length";
    auto grid = param_pair_grid(
        cfg.params, "grid",
        green ? std::vector<std::pair<std::size_t, std::size_t>>{{2, 2}, {2, 4}, {4, 2},
                                                                 {4, 4}}
              : std::vector<std::pair<std::size_t, std::size_t>>{{50, 50},
                                                                 {50, 100},
                                                                 {50, 200},
                                                                 {100, 50},
                                                                 {100, 100},
                                                                 {100, 200},
                                                                 {200, 50},
                                                                 {200, 100},
                                                                 {200, 200}});
    auto thresholds = param_double_grid(
        cfg.params, "thresholds",
        green ? std::vector<double>{0, 1, 2, 3, 4, 5, 6, 7, 8}
              : std::vector<double>{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20});
    std::size_t samples = param_size(cfg.params, "samples", green ? 400 : 30000);
    double min_rate = param_double(cfg.params, "min_rate", 0.0);
    double max_spread = param_double(cfg.params, "max_spread", green ? 1.0 : 0.2);

    Cocycle c = Cocycle::length(cfg.backend);
    std::shared_ptr<GreenMemo> memo;
    if (green) {
        const auto& gp = cfg.green_cocycle_params;
        std::size_t horizon = gp.value("horizon", 200);
        std::size_t trials = gp.value("trials", 30000);
        std::uint64_t budget = gp.value("budget_steps", 4000000000ull);
        memo = std::make_shared<GreenMemo>(cfg.measure, horizon, trials,
                                           cfg.seed ^ fnv1a64("green-cocycle"), budget);
        c = green_length_cocycle(cfg.measure, memo);
    } else {
        c = cfg.make_cocycle();
    }
    auto fit = deviation_tail(c, *cfg.measure, grid, thresholds, samples, cfg.seed, par);

    SuiteResult out;
    out.rows.push_back(
        row(cfg, "deviation_tail", c.name(), "-", "rate", fit.rate, 0, samples));
    out.rows.push_back(row(cfg, "deviation_tail", c.name(), "-", "log_prefactor",
                           fit.log_prefactor, 0, samples));
    out.rows.push_back(row(cfg, "deviation_tail", c.name(), "-", "rate_spread",
                           fit.rate_spread, 0, samples));
    out.rows.push_back(row(cfg, "deviation_tail", c.name(), "-", "fit_rms", fit.fit_rms,
                           0, samples));
    std::vector<std::pair<double, double>> curve;
    for (std::size_t i = 0; i < fit.thresholds.size(); ++i) {
        out.rows.push_back(row(cfg, "deviation_tail", c.name(),
                               format_double(fit.thresholds[i]), "survival",
                               fit.survival[i], 0, samples));
        if (fit.survival[i] > 0)
            curve.emplace_back(fit.thresholds[i], fit.survival[i]);
    }
    out.plots.emplace_back("deviation_survival.dat", two_column(curve));

    out.criteria.push_back(criterion_bool("tail fit is nondegenerate", !fit.degenerate));
    out.criteria.push_back(criterion_ge("fitted tail rate positive", fit.rate,
                                        std::max(min_rate, 1e-9)));
    out.criteria.push_back(
        criterion_le("rate stable across the (n,m) grid", fit.rate_spread, max_spread));
    return out;
}

SuiteResult run_clt(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params, {"n_grid", "samples", "ks_threshold"}, "config.params");
    auto grid = param_grid(cfg.params, "n_grid", {125, 250, 500, 1000});
    std::size_t samples = param_size(cfg.params, "samples", 5000);
    double ks_threshold = param_double(cfg.params, "ks_threshold", 0.03);

    Cocycle c = cfg.make_cocycle();
    auto rep = clt_suite(c, *cfg.measure, grid, samples, cfg.seed, par);

    SuiteResult out;
    std::vector<std::pair<double, double>> ks_points;
    for (const auto& pt : rep.points) {
        std::string n = std::to_string(pt.n);
        out.rows.push_back(row(cfg, "clt", c.name(), n, "ks_vs_fitted_normal",
                               pt.ks_vs_fitted_normal, 0, samples));
        out.rows.push_back(row(cfg, "clt", c.name(), n, "sigma2", pt.sigma2,
                               pt.sigma2_se, samples));
        out.rows.push_back(row(cfg, "clt", c.name(), n, "skewness", pt.skewness, 0,
                               samples));
        out.rows.push_back(row(cfg, "clt", c.name(), n, "excess_kurtosis",
                               pt.excess_kurtosis, 0, samples));
        ks_points.emplace_back(static_cast<double>(pt.n), pt.ks_vs_fitted_normal);
    }
    out.plots.emplace_back("clt_ks.dat", two_column(ks_points));
    out.plots.emplace_back("clt_qq.dat", two_column(rep.qq));

    const auto& last = rep.points.back();
    if (cfg.backend.nonamenable()) {
        out.criteria.push_back(criterion_le("final KS distance against fitted normal",
                                            last.ks_vs_fitted_normal, ks_threshold));
        out.criteria.push_back(
            criterion_bool("KS decreases along the n grid", rep.ks_decreasing));
        out.criteria.push_back(criterion_ge("limit variance positive at 5 SE",
                                            last.sigma2, 5 * last.sigma2_se));
    } else {
        // Negative control: the folded limit law is not Gaussian.
        double ks_folded = ks_statistic(
            rep.final_scaled, [](double x) { return half_normal_cdf(x); });
        out.rows.push_back(row(cfg, "clt", c.name(), std::to_string(last.n),
                               "ks_vs_folded_normal", ks_folded, 0, samples));
        out.criteria.push_back(criterion_ge("control flagged non-gaussian",
                                            last.ks_vs_fitted_normal, ks_threshold));
        out.criteria.push_back(
            criterion_le("control matches the folded-normal oracle", ks_folded, 0.05));
    }
    return out;
}

SuiteResult run_green(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params,
                 {"targets", "horizon", "trials", "adaptive_trials", "tolerance",
                  "cache_file"},
                 "config.params");
    std::size_t horizon = param_size(cfg.params, "horizon", 300);
    std::size_t base_trials = param_size(cfg.params, "trials", 200000);
    bool adaptive = !cfg.params.contains("adaptive_trials") ||
                    cfg.params.at("adaptive_trials").get<bool>();
    double tolerance = param_double(cfg.params, "tolerance", 0.02);

    std::vector<GroupElement> targets;
    if (cfg.params.contains("targets")) {
        for (const auto& w : cfg.params.at("targets"))
            targets.push_back(cfg.backend.parse(w.get<std::string>()));
    } else {
        std::vector<Gen> letters;
        for (int len = 1; len <= 5; ++len) {
            letters.push_back(Gen{static_cast<std::uint8_t>(
                                      cfg.backend.rank() > 1 ? (len % 2 == 1 ? 0 : 1) : 0),
                                  +1});
            targets.push_back(cfg.backend.normalize(letters));
        }
    }

    double growth = std::max<double>(2.0, static_cast<double>(
                                              cfg.backend.standard_generators().size()) -
                                              1.0);
    bool oracle = is_free_srw(cfg);
    double per_unit = oracle ? free_srw_green_per_unit(cfg) : 0.0;

    // Optional spend-saving cache, keyed by (fingerprint, word, horizon,
    // trials); estimates are deterministic given the seed, so cached counts
    // coincide with recomputed ones under one configuration.
    std::string cache_path = cfg.params.value("cache_file", std::string{});
    std::string fp = cfg.measure->fingerprint();
    std::map<std::tuple<std::string, std::size_t, std::size_t>, std::size_t> cache;
    if (!cache_path.empty()) {
        std::ifstream in(cache_path);
        std::string line;
        while (in && std::getline(in, line)) {
            std::istringstream rowin(line);
            std::string lfp, word;
            std::size_t n = 0, m = 0, hits = 0;
            if ((rowin >> lfp >> word >> n >> m >> hits) && lfp == fp)
                cache[{word, n, m}] = hits;
        }
    }

    SuiteResult out;
    std::vector<std::pair<double, double>> curve;
    for (const auto& z : targets) {
        std::size_t len = z.letters.size();
        std::size_t trials = base_trials;
        if (adaptive)
            trials = std::max<std::size_t>(
                base_trials,
                static_cast<std::size_t>(4000.0 * std::pow(growth, static_cast<double>(len))));
        GreenEstimate est;
        std::string zword = cfg.backend.render(z);
        auto full = cache.find({zword, horizon, trials});
        auto half = cache.find({zword, horizon / 2, trials});
        if (full != cache.end() && half != cache.end()) {
            est.target = z;
            est.horizon = horizon;
            est.trials = trials;
            est.hits = full->second;
            est.hits_half = half->second;
            est.infinite = est.hits == 0 && !z.is_identity();
        } else {
            est = green_distance(z, *cfg.measure, horizon, trials, cfg.seed, par);
            cache[{zword, horizon, trials}] = est.hits;
            cache[{zword, horizon / 2, trials}] = est.hits_half;
        }
        std::string word = cfg.backend.render(z);
        out.rows.push_back(row(cfg, "green_distance", word, std::to_string(len),
                               "distance", est.distance(), est.se(), trials));
        out.rows.push_back(row(cfg, "green_distance", word, std::to_string(len),
                               "hitting_probability", est.hitting_probability(), 0,
                               trials));
        out.rows.push_back(row(cfg, "green_distance", word, std::to_string(len),
                               "horizon_delta", est.horizon_delta(), 0, trials));
        curve.emplace_back(static_cast<double>(len), est.distance());
        out.criteria.push_back(criterion_bool(
            "estimate resolved for " + word + " (some trial hit)", !est.infinite));
        if (oracle && len > 0)
            out.criteria.push_back(criterion_le(
                "per-unit green distance of " + word + " within tolerance of log(2k-1)",
                std::abs(est.distance() / static_cast<double>(len) - per_unit),
                tolerance * per_unit));
    }
    out.plots.emplace_back("green_distance.dat", two_column(curve));

    if (!cache_path.empty()) {
        std::ofstream outfile(cache_path, std::ios::trunc);
        for (const auto& [key, hits] : cache)
            outfile << fp << ' ' << std::get<0>(key) << ' ' << std::get<1>(key) << ' '
                    << std::get<2>(key) << ' ' << hits << '\n';
    }

    auto diag = spectral_radius_diagnostic(*cfg.measure, 5);
    out.rows.push_back(row(cfg, "spectral_radius", "-", "-", "fitted_ratio",
                           diag.fitted_ratio, 0, 0));
    out.criteria.push_back(criterion_le("return-probability ratio below 1",
                                        diag.fitted_ratio, 1.0 - 1e-6));
    return out;
}

SuiteResult run_entropy(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params,
                 {"n_grid", "samples", "inner_walks", "inner_horizon",
                  "convolution_powers", "tolerance"},
                 "config.params");
    EntropyParams params;
    params.n_grid = param_grid(cfg.params, "n_grid", {8, 10, 12});
    params.samples = param_size(cfg.params, "samples", 8000);
    params.inner_walks = param_size(cfg.params, "inner_walks", 2000000);
    params.inner_horizon = param_size(cfg.params, "inner_horizon", 400);
    params.convolution_powers =
        static_cast<int>(param_size(cfg.params, "convolution_powers", 6));

    auto rep = entropy_estimate(*cfg.measure, params, cfg.seed, par);

    SuiteResult out;
    out.rows.push_back(row(cfg, "entropy", "green_length", "-", "entropy_nats",
                           rep.value, rep.se, rep.samples));
    out.rows.push_back(row(cfg, "entropy", "green_length", "-", "entropy_bits",
                           nats_to_bits(rep.value), nats_to_bits(rep.se), rep.samples));
    out.rows.push_back(row(cfg, "entropy", "green_length", "-", "convolution_bound",
                           rep.convolution_bound, 0, 0));
    std::vector<std::pair<double, double>> curve;
    for (const auto& pt : rep.points) {
        out.rows.push_back(row(cfg, "entropy", "green_length", std::to_string(pt.n),
                               "mean_green_distance", pt.mean_green_distance, pt.se,
                               rep.samples));
        out.rows.push_back(row(cfg, "entropy", "green_length", std::to_string(pt.n),
                               "mean_horizon_delta", pt.mean_horizon_delta, 0,
                               rep.samples));
        curve.emplace_back(static_cast<double>(pt.n), pt.mean_green_distance);
    }
    out.plots.emplace_back("entropy_green_distance.dat", two_column(curve));

    out.criteria.push_back(criterion_bool(
        "entropy respects the exact-convolution bound", rep.within_bound));
    if (is_free_srw(cfg)) {
        double expected = free_srw_speed(cfg) * free_srw_green_per_unit(cfg);
        double tolerance = param_double(cfg.params, "tolerance", 0.05);
        out.criteria.push_back(
            criterion_le("entropy within tolerance of (k-1)/k log(2k-1)",
                         std::abs(rep.value - expected), tolerance * expected));
    }
    return out;
}

SuiteResult run_sensitivity(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params,
                 {"n_grid", "samples", "step1", "step2", "girsanov_n",
                  "girsanov_samples", "enumeration_n", "lipschitz_n", "green_audit",
                  "green_audit_trials"},
                 "config.params");
    if (!cfg.measure2)
        throw ConfigError("sensitivity suite needs \"measure2\" as the curve endpoint");
    MeasureCurve curve(cfg.measure, cfg.measure2);
    Cocycle c = Cocycle::length(cfg.backend);

    auto grid = param_grid(cfg.params, "n_grid", {100, 200, 400});
    std::size_t samples = param_size(cfg.params, "samples", 8000);
    double step1 = param_double(cfg.params, "step1", 0.05);
    double step2 = param_double(cfg.params, "step2", 0.025);

    SuiteResult out;

    auto deriv = speed_derivative(curve, c, grid, samples, cfg.seed, par, step1, step2);
    out.rows.push_back(row(cfg, "speed_derivative", c.name(),
                           std::to_string(grid.back()), "covariance", deriv.covariance,
                           deriv.covariance_se, samples));
    out.rows.push_back(row(cfg, "speed_derivative", c.name(),
                           std::to_string(grid.back()), "finite_difference",
                           deriv.finite_difference, deriv.finite_difference_se, samples));
    out.rows.push_back(row(cfg, "speed_derivative", c.name(),
                           std::to_string(grid.back()), "covariance_stability",
                           deriv.covariance_stability, 0, samples));
    out.criteria.push_back(criterion_bool(
        "derivative: covariance and finite difference agree within 3 SE", deriv.agree));
    out.criteria.push_back(
        criterion_bool("derivative: significant signs agree", deriv.sign_consistent));

    std::size_t lip_n = param_size(cfg.params, "lipschitz_n", 400);
    auto lip = lipschitz_audit(cfg.measure, cfg.measure2, c, lip_n, samples, cfg.seed,
                               par);
    out.rows.push_back(row(cfg, "lipschitz", c.name(), std::to_string(lip_n),
                           "speed_gap_per_step", lip.delta, lip.delta_se, samples));
    out.rows.push_back(
        row(cfg, "lipschitz", c.name(), "-", "nu_distance", lip.nu, 0, samples));
    out.rows.push_back(row(cfg, "lipschitz", c.name(), "-", "assembled_constant",
                           lip.constant, 0, samples));
    out.rows.push_back(
        row(cfg, "lipschitz", c.name(), "-", "gap_over_nu", lip.ratio, 0, samples));
    out.criteria.push_back(criterion_bool(
        "lipschitz: speed gap below the assembled constant times nu", lip.within));

    std::size_t gn = param_size(cfg.params, "girsanov_n", 100);
    std::size_t gs = param_size(cfg.params, "girsanov_samples", 20000);
    auto F = [](const Trajectory& t) {
        return static_cast<double>(word_length(t.positions.back()));
    };
    auto rew = girsanov_estimate(F, *cfg.measure, *cfg.measure2, gn, gs, cfg.seed, par);
    std::vector<double> direct(gs);
    par.for_each_index(gs, [&](std::size_t i) {
        direct[i] = F(generate_trajectory(*cfg.measure2, gn, cfg.seed, i, "girsanov-direct"));
    });
    auto direct_ms = mean_se(direct);
    out.rows.push_back(row(cfg, "girsanov", c.name(), std::to_string(gn),
                           "reweighted_mean", rew.estimate, rew.se, gs));
    out.rows.push_back(row(cfg, "girsanov", c.name(), std::to_string(gn), "direct_mean",
                           direct_ms.value, direct_ms.se, gs));
    out.rows.push_back(row(cfg, "girsanov", c.name(), std::to_string(gn), "mean_weight",
                           rew.mean_weight, rew.mean_weight_se, gs));
    out.rows.push_back(row(cfg, "girsanov", c.name(), std::to_string(gn),
                           "effective_sample_fraction", rew.effective_sample_fraction, 0,
                           gs));
    double gap = std::abs(rew.estimate - direct_ms.value);
    double combined =
        3 * std::sqrt(rew.se * rew.se + direct_ms.se * direct_ms.se);
    out.criteria.push_back(criterion_le(
        "girsanov: reweighted matches direct simulation (3 SE)", gap, combined));
    out.criteria.push_back(criterion_le(
        "girsanov: likelihood ratios average to 1 (4 SE)",
        std::abs(rew.mean_weight - 1.0), 4 * rew.mean_weight_se + 1e-12));

    std::size_t enum_n = param_size(cfg.params, "enumeration_n", 4);
    if (cfg.measure->finite_support()) {
        const GroupBackend& b = cfg.backend;
        double worst = 0;
        for (std::size_t n = 1; n <= enum_n; ++n) {
            auto tuple_f = [&](const std::vector<GroupElement>& xs) {
                GroupElement z = b.identity();
                for (const auto& x : xs)
                    z = b.multiply(z, x);
                return static_cast<double>(word_length(z));
            };
            double reweighted = enumerate_expectation(
                *cfg.measure, n, [&](const std::vector<GroupElement>& xs) {
                    double w = 1;
                    for (const auto& x : xs)
                        w *= cfg.measure2->pmf(x) / cfg.measure->pmf(x);
                    return w * tuple_f(xs);
                });
            double target = enumerate_expectation(*cfg.measure2, n, tuple_f);
            worst = std::max(worst, std::abs(reweighted - target));
        }
        out.rows.push_back(row(cfg, "girsanov", c.name(), std::to_string(enum_n),
                               "exact_identity_error", worst, 0, 0));
        out.criteria.push_back(criterion_le(
            "girsanov: exact enumeration identity to 1e-12", worst, 1e-12));
    }

    bool green_audit = cfg.params.value("green_audit", false);
    if (green_audit) {
        std::size_t trials = param_size(cfg.params, "green_audit_trials", 40000);
        auto fluc = green_fluctuation_audit(cfg.measure, cfg.measure2, 4, 250, trials,
                                            cfg.seed, par);
        for (const auto& pt : fluc.points) {
            std::string word = cfg.backend.render(pt.target);
            out.rows.push_back(row(cfg, "green_fluctuation", word,
                                   std::to_string(word_length(pt.target)),
                                   "normalized_gap", pt.normalized_gap, 0, trials));
            out.rows.push_back(row(cfg, "green_fluctuation", word,
                                   std::to_string(word_length(pt.target)),
                                   "conditional_hitting_ratio", pt.conditional_hits0, 0,
                                   trials));
        }
        out.rows.push_back(row(cfg, "green_fluctuation", "-", "-", "max_normalized_gap",
                               fluc.max_normalized_gap, 0, trials));
    }
    return out;
}

SuiteResult run_decompose_check(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params, {"n_max", "defect_samples", "brooks_samples"},
                 "config.params");
    std::size_t n_max = param_size(cfg.params, "n_max", 1024);
    std::size_t defect_samples = param_size(cfg.params, "defect_samples", 100000);
    std::size_t brooks_samples = param_size(cfg.params, "brooks_samples", 20000);

    const GroupBackend& b = cfg.backend;
    Cocycle length_c = Cocycle::length(b);
    Cocycle additive_c = additive_sign_cocycle();

    SuiteResult out;

    // Dyadic reconstruction over every n and block exponent, both kinds.
    struct Worst {
        double residual = 0;
    };
    std::vector<Worst> per_n(n_max + 1);
    par.for_each_index(n_max - 1, [&](std::size_t idx) {
        std::size_t n = idx + 2;
        Trajectory t = generate_trajectory(*cfg.measure, n, cfg.seed, n, "dyadic");
        double worst = 0;
        for (std::size_t M = 0; (std::size_t{1} << M) <= n; ++M) {
            for (const Cocycle* c : {&length_c, &additive_c}) {
                auto d = dyadic_decompose(*c, t, M);
                worst = std::max(worst,
                                 std::abs(d.residual()) / (1 + std::abs(d.q_n)));
            }
        }
        per_n[n].residual = worst;
    });
    double max_residual = 0;
    for (const auto& w : per_n)
        max_residual = std::max(max_residual, w.residual);
    out.rows.push_back(row(cfg, "dyadic", "length+additive", std::to_string(n_max),
                           "max_relative_residual", max_residual, 0, n_max - 1));
    out.criteria.push_back(
        criterion_le("dyadic reconstruction residual", max_residual, 1e-9));

    // Length defect against the Gromov product, and the additive defect.
    std::size_t traj_count = std::max<std::size_t>(1, defect_samples / 100);
    std::vector<double> worst_gap(traj_count, 0.0);
    std::vector<double> worst_additive(traj_count, 0.0);
    par.for_each_index(traj_count, [&](std::size_t i) {
        Trajectory t = generate_trajectory(*cfg.measure, 128, cfg.seed, i, "defectid");
        CounterRng pick = CounterRng::stream(cfg.seed, "defectpick", i);
        double wg = 0, wa = 0;
        for (int rep = 0; rep < 100; ++rep) {
            std::size_t n = pick.uniform_below(t.length() + 1);
            std::size_t m = pick.uniform_below(t.length() - n + 1);
            double psi = defect(length_c, t, n, m).value;
            double product =
                b.gromov_product(b.identity(), t.positions[n + m], t.positions[n]);
            wg = std::max(wg, std::abs(psi + 2 * product));
            wa = std::max(wa, std::abs(defect(additive_c, t, n, m).value));
        }
        worst_gap[i] = wg;
        worst_additive[i] = wa;
    });
    double defect_gap = *std::max_element(worst_gap.begin(), worst_gap.end());
    double additive_defect = *std::max_element(worst_additive.begin(), worst_additive.end());
    out.rows.push_back(row(cfg, "defect_identity", "length", "-", "max_abs_gap",
                           defect_gap, 0, traj_count * 100));
    out.rows.push_back(row(cfg, "defect_identity", "additive_sign", "-", "max_abs_defect",
                           additive_defect, 0, traj_count * 100));
    out.criteria.push_back(criterion_le(
        "length defect equals -2 gromov product", defect_gap, 1e-9));
    out.criteria.push_back(
        criterion_le("additive defect vanishes", additive_defect, 0.0));

    // Brooks counting quasimorphism: the defect stays uniformly bounded.
    if (b.kind() == BackendKind::FreeGroup) {
        Cocycle brooks = brooks_counting_cocycle(b, cfg.brooks_pattern);
        std::size_t bt = std::max<std::size_t>(1, brooks_samples / 10);
        std::vector<double> bound(bt, 0.0);
        par.for_each_index(bt, [&](std::size_t i) {
            Trajectory t = generate_trajectory(*cfg.measure, 60, cfg.seed, i, "brooks");
            CounterRng pick = CounterRng::stream(cfg.seed, "brookspick", i);
            double w = 0;
            for (int rep = 0; rep < 10; ++rep) {
                std::size_t n = pick.uniform_below(t.length() + 1);
                std::size_t m = pick.uniform_below(t.length() - n + 1);
                w = std::max(w, std::abs(defect(brooks, t, n, m).value));
            }
            bound[i] = w;
        });
        double observed = *std::max_element(bound.begin(), bound.end());
        out.rows.push_back(row(cfg, "quasimorphism", brooks.name(), "-",
                               "observed_defect_bound", observed, 0, bt * 10));
    }
    return out;
}

SuiteResult run_lazy_check(const ExperimentConfig& cfg, const Parallel&) {
    require_keys(cfg.params, {"n_max", "budget"}, "config.params");
    std::size_t n_max = param_size(cfg.params, "n_max", 4);
    std::size_t budget = param_size(cfg.params, "budget", 10000000);

    SuiteResult out;
    double worst_tv = 0, worst_binom = 0, worst_indep = 0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        LazyDecompositionReport rep;
        try {
            rep = lazy_decomposition_check(*cfg.measure, n, budget);
        } catch (const BudgetError& e) {
            out.incomplete = true;
            out.error = e.what();
            break;
        }
        out.rows.push_back(row(cfg, "lazy_decomposition", "-", std::to_string(n),
                               "max_tv_distance", rep.max_tv, 0, 0));
        out.rows.push_back(row(cfg, "lazy_decomposition", "-", std::to_string(n),
                               "binomial_max_error", rep.binomial_max_error, 0, 0));
        out.rows.push_back(row(cfg, "lazy_decomposition", "-", std::to_string(n),
                               "independence_max_error", rep.independence_max_error, 0,
                               0));
        worst_tv = std::max(worst_tv, rep.max_tv);
        worst_binom = std::max(worst_binom, rep.binomial_max_error);
        worst_indep = std::max(worst_indep, rep.independence_max_error);
    }
    out.criteria.push_back(criterion_le(
        "conditional law matches the stripped walk (TV)", worst_tv, 1e-10));
    out.criteria.push_back(
        criterion_le("idle count is Binomial(n, mu(id))", worst_binom, 1e-12));
    out.criteria.push_back(criterion_le("idle pattern independent of active increments",
                                        worst_indep, 1e-12));
    return out;
}

SuiteResult run_linear_progress(const ExperimentConfig& cfg, const Parallel& par) {
    require_keys(cfg.params, {"progress_constant", "n_grid", "samples", "min_r2"},
                 "config.params");
    double C = param_double(cfg.params, "progress_constant", 4.0);
    auto grid = param_grid(cfg.params, "n_grid", {40, 60, 80, 100, 120});
    std::size_t samples = param_size(cfg.params, "samples", 200000);
    double min_r2 = param_double(cfg.params, "min_r2", 0.9);

    auto rep = linear_progress_tail(*cfg.measure, C, grid, samples, cfg.seed, par);

    SuiteResult out;
    std::vector<std::pair<double, double>> curve;
    for (const auto& pt : rep.points) {
        out.rows.push_back(row(cfg, "linear_progress", "length", std::to_string(pt.n),
                               "survival", pt.survival, 0, samples));
        curve.emplace_back(static_cast<double>(pt.n), pt.survival);
    }
    out.rows.push_back(row(cfg, "linear_progress", "length", "-", "log_slope",
                           rep.fit_valid ? rep.log_fit.slope : 0, 0, samples));
    out.rows.push_back(row(cfg, "linear_progress", "length", "-", "r2",
                           rep.fit_valid ? rep.log_fit.r2 : 0, 0, samples));
    out.plots.emplace_back("linear_progress_survival.dat", two_column(curve));

    if (cfg.backend.nonamenable()) {
        out.criteria.push_back(criterion_bool("exponential decay with a linear log fit",
                                              rep.decays));
        out.criteria.push_back(criterion_ge("log-survival fit quality",
                                            rep.fit_valid ? rep.log_fit.r2 : 0, min_r2));
    } else {
        out.criteria.push_back(criterion_ge("control shows no decay",
                                            rep.final_survival, 0.9));
    }
    return out;
}

} // namespace

const std::vector<SuiteInfo>& suite_registry() {
    static const std::vector<SuiteInfo> registry = {
        {"deviation",
         "exponential tails of the cocycle defect over an (n,m) grid",
         "Samples |Psi_{n,m}| = |Q_{n+m} - Q_n - Q_m o theta_n| over an (n, m) grid and\n"
         "fits the worst-case survival curve with A exp(-B c). For the length cocycle\n"
         "the defect is -2 (id, Z_{n+m})_{Z_n}, so a positive fitted rate B is the\n"
         "empirical form of the exponential-tail deviation inequality: successive\n"
         "positions of the walk stay aligned up to fluctuations of order one.\n"
         "Pass conditions: nondegenerate fit, B > 0, per-cell rates within 20% of\n"
         "their mean. Requires a measure with finite or exponential tail.",
         run_deviation},
        {"clt",
         "gaussian fluctuations of Q_n after sqrt(n) scaling",
         "Draws Q_n over an n grid with shared trajectories, normalizes by the sample\n"
         "mean and sqrt(n), and reports the KS distance to a fitted centered normal\n"
         "together with skewness and excess kurtosis. Verifies that the fluctuations\n"
         "of the cocycle become Gaussian with a strictly positive limit variance, and\n"
         "that the KS distance shrinks as n grows. On amenable control backends the\n"
         "criteria invert: the walk is flagged non-Gaussian and compared against the\n"
         "folded-normal oracle instead.",
         run_clt},
        {"green",
         "green metric via truncated hitting probabilities",
         "Estimates d_G(id, z) = -log P[T_z < infinity] for configured targets by\n"
         "truncated Monte Carlo with per-target substreams, reporting hitting\n"
         "probabilities, horizon-doubling deltas and delta-method errors. On the free\n"
         "group with the uniform generator walk the exact value is |z| log(2k-1),\n"
         "which drives the oracle pass condition. Also reports the exact-convolution\n"
         "return-probability decay (spectral radius diagnostic).\n"
         "Requires a symmetric measure on a nonamenable backend.",
         run_green},
        {"entropy",
         "asymptotic entropy as the escape rate in the green metric",
         "Runs outer trajectories, estimates the Green distance of every visited\n"
         "endpoint from one shared inner walk ensemble, and fits the growth of\n"
         "E d_G(id, Z_n) in n. The slope is the asymptotic entropy; it is\n"
         "cross-checked against the exact-convolution upper bound min_n H(mu^n)/n\n"
         "(violation beyond 3 SE aborts the run as estimator bias). On the free group\n"
         "with the uniform walk the exact value (k-1)/k log(2k-1) drives an oracle\n"
         "pass condition. Requires a symmetric measure on a nonamenable backend.",
         run_entropy},
        {"sensitivity",
         "girsanov reweighting, speed derivative and lipschitz audit",
         "Everything about perturbing the driving measure along a linear curve\n"
         "mu_t = mu_0 + t(mu_1 - mu_0): (i) importance-sampling estimates under the\n"
         "endpoint from base-measure trajectories, checked against direct simulation\n"
         "and, on small horizons, against exact enumeration (the reweighting formula\n"
         "is an algebraic identity); (ii) the derivative of the speed, estimated both\n"
         "as the covariance (1/n) Cov(Q_n, sum nu(X_j)) and as a coupled Richardson\n"
         "finite difference, with an agreement verdict; (iii) a Lipschitz audit\n"
         "|speed(mu_1) - speed(mu_0)| <= C nu(mu_0, mu_1) with the explicit constant\n"
         "assembled from chi_1 and grid-estimated tau_1 along the segment.\n"
         "Needs \"measure2\"; optional green_audit adds Green-metric fluctuation rows.",
         run_sensitivity},
        {"decompose-check",
         "exact dyadic decomposition and defect identities",
         "Reconstructs Q_n from binary-carry boundary defects, blocks of length 2^M,\n"
         "the regrouping residue and the defect layers above M, for every n up to\n"
         "n_max and every valid M, for both the length and an additive cocycle; the\n"
         "residual must vanish to 1e-9. Also verifies pathwise that the length-cocycle\n"
         "defect equals -2 (id, Z_{n+m})_{Z_n}, that additive defects vanish\n"
         "identically, and reports the observed defect bound of the Brooks counting\n"
         "quasimorphism.",
         run_decompose_check},
        {"lazy-check",
         "exact idle/active decomposition of a lazy walk",
         "For a measure with an atom at the identity, enumerates all increment tuples\n"
         "and verifies exactly: the conditional law of Z_n given k idle steps equals\n"
         "the stripped walk after n-k steps (TV distance 0), the idle count is\n"
         "Binomial(n, mu(id)), and the idle pattern is independent of the active\n"
         "increments. The stripped-walk laws come from exact convolution, so the two\n"
         "sides are computed by different routes.",
         run_lazy_check},
        {"linear-progress",
         "escape probability tails P[d(id, Z_n) <= n/C]",
         "Estimates the probability that the walk fails to make linear progress at\n"
         "rate 1/C and fits log survival against n. On nonamenable backends the\n"
         "survival must decay exponentially (negative slope, R^2 above the\n"
         "threshold); on the integer-line control the criterion inverts and the\n"
         "survival must stay near 1 (diffusive scaling).",
         run_linear_progress},
    };
    return registry;
}

namespace {

const SuiteInfo& speed_suite() {
    static const SuiteInfo info = {
        "speed",
        "rate of escape: mean of Q_n/n with the mean-based bracket",
        "Estimates the rate of escape as the mean of Q_n/n over fresh trajectories,\n"
        "with a standard error and the bracket [mean - tau_1/n, mean + tau_1/n]\n"
        "derived from the first-moment defect constant. Optional params \"expected\"\n"
        "and \"tolerance\" add a pass condition; for the uniform-generator walk on a\n"
        "free group the oracle (k-1)/k is used automatically.",
        run_speed};
    return info;
}

} // namespace

const SuiteInfo* find_suite(const std::string& name) {
    for (const auto& info : suite_registry())
        if (info.name == name)
            return &info;
    if (name == speed_suite().name)
        return &speed_suite();
    return nullptr;
}

std::vector<std::string> suggest_suites(const std::string& name) {
    std::vector<std::string> out;
    for (const auto& info : suite_registry())
        if (info.name.find(name) != std::string::npos || name.empty())
            out.push_back(info.name);
    if (out.empty())
        for (const auto& info : suite_registry())
            out.push_back(info.name);
    return out;
}

std::string trajectory_dump(const ExperimentConfig& cfg, std::size_t steps) {
    Cocycle c = cfg.cocycle_kind.value_or("length") == "green_length"
                    ? Cocycle::length(cfg.backend)
                    : cfg.make_cocycle();
    Trajectory t = generate_trajectory(*cfg.measure, steps, cfg.seed, 0, "dump");
    std::string out = "# j X_j Z_j Q_j\n";
    for (std::size_t j = 1; j <= t.length(); ++j) {
        out += std::to_string(j);
        out += ' ';
        out += cfg.backend.render(t.increments[j - 1]);
        out += ' ';
        out += cfg.backend.render(t.positions[j]);
        out += ' ';
        out += format_double(c.eval(t, j));
        out += '\n';
    }
    return out;
}

} // namespace clab
