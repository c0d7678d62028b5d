// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances and thresholds are pinned here, in code.

#include "clab/errors.hpp"
#include "clab/estimators.hpp"
#include "clab/green.hpp"
#include "clab/sensitivity.hpp"
#include "clab/stats.hpp"
#include "clab/suites.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace clab;
using nlohmann::json;

namespace {

constexpr std::uint64_t kSeed = 20260810;
int failures = 0;

void check(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[criterion %2d] %s  %s  (%s)\n", criterion, pass ? "PASS" : "FAIL",
                name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

std::string num(double x) { return format_double(x); }

json f2_backend() { return json{{"kind", "free_group"}, {"rank", 2}}; }
json srw_measure() { return json{{"family", "uniform_generators"}}; }

ExperimentConfig make_cfg(const std::string& suite, json params,
                          json measure = srw_measure(), json backend = f2_backend(),
                          json measure2 = json()) {
    json doc{{"experiment", "acceptance-" + suite},
             {"suite", suite},
             {"seed", kSeed},
             {"backend", backend},
             {"measure", measure},
             {"params", params}};
    if (!measure2.is_null())
        doc["measure2"] = measure2;
    return parse_config(doc);
}

MeasurePtr srw_f2() { return make_uniform_generators(GroupBackend::free_group(2)); }

MeasurePtr table_f2(double a, double ai, double bg, double bi) {
    auto f2 = GroupBackend::free_group(2);
    return make_finite_table(f2, {{f2.parse("a"), a},
                                  {f2.parse("A"), ai},
                                  {f2.parse("b"), bg},
                                  {f2.parse("B"), bi}});
}

bool all_pass(const SuiteResult& r) {
    for (const auto& c : r.criteria)
        if (!c.pass)
            return false;
    return true;
}

std::string criteria_detail(const SuiteResult& r) {
    std::string out;
    for (const auto& c : r.criteria) {
        if (!out.empty())
            out += "; ";
        out += c.name + "=" + num(c.value) + (c.pass ? "" : " [FAIL]");
    }
    return out;
}

// --------------------------------------------------------------------------

void criterion_1_algebraic_identities(const Parallel& par) {
    auto cfg = make_cfg("decompose-check", json{{"n_max", 1024},
                                                {"defect_samples", 100000},
                                                {"brooks_samples", 20000}});
    auto result = find_suite("decompose-check")->run(cfg, par);
    double residual = 0, defect_gap = 0, additive = 0, brooks = 0;
    for (const auto& r : result.rows) {
        if (r.statistic == "max_relative_residual")
            residual = r.value;
        if (r.statistic == "max_abs_gap")
            defect_gap = r.value;
        if (r.statistic == "max_abs_defect")
            additive = r.value;
        if (r.statistic == "observed_defect_bound")
            brooks = r.value;
    }
    check(1, "dyadic reconstruction exact for n in 2..1024, both cocycle kinds",
          residual <= 1e-9, "max relative residual " + num(residual));
    check(1, "length defect = -2 gromov product on 1e5 sampled (trajectory, n, m)",
          defect_gap <= 1e-9, "max gap " + num(defect_gap));
    check(1, "additive cocycle defect vanishes identically", additive == 0.0,
          "max |defect| " + num(additive));
    check(1, "brooks quasimorphism defect bounded (reported)", brooks > 0 && brooks < 50,
          "observed bound " + num(brooks));
}

void criterion_2_free_group_oracles(const Parallel& par) {
    {
        auto cfg = make_cfg("speed", json{{"n", 1000}, {"samples", 10000}});
        auto result = find_suite("speed")->run(cfg, par);
        double speed = result.rows.at(0).value;
        check(2, "speed of F2 SRW = 0.5 +- 0.01 at n=1000, 1e4 walks",
              std::abs(speed - 0.5) <= 0.01, "speed " + num(speed));
    }
    {
        auto cfg = make_cfg("green", json::object());
        auto result = find_suite("green")->run(cfg, par);
        check(2, "green distance per unit length = log 3 +- 2% for |z| <= 5",
              all_pass(result), criteria_detail(result));
    }
    {
        auto cfg = make_cfg("entropy", json::object());
        auto result = find_suite("entropy")->run(cfg, par);
        double value = 0, bound = 0;
        for (const auto& r : result.rows) {
            if (r.statistic == "entropy_nats")
                value = r.value;
            if (r.statistic == "convolution_bound")
                bound = r.value;
        }
        double expected = 0.5 * std::log(3.0);
        check(2, "entropy of F2 SRW = (1/2) log 3 +- 5%",
              std::abs(value - expected) <= 0.05 * expected,
              "entropy " + num(value) + " vs " + num(expected));
        check(2, "entropy below the exact-convolution bound min_{n<=6} H(mu^n)/n",
              all_pass(result), "bound " + num(bound));
    }
}

void criterion_3_deviation(const Parallel& par) {
    {
        auto cfg = make_cfg("deviation", json{{"samples", 30000}});
        auto result = find_suite("deviation")->run(cfg, par);
        check(3, "exponential defect tail for F2 SRW: B > 0, < 20% grid variation",
              all_pass(result), criteria_detail(result));
    }
    {
        auto cfg = make_cfg("deviation", json{{"samples", 30000}},
                            json{{"family", "geometric_length"}, {"p", 0.3}});
        auto result = find_suite("deviation")->run(cfg, par);
        check(3, "exponential defect tail for GeometricLength(0.3): B > 0, stable",
              all_pass(result), criteria_detail(result));
    }
}

void criterion_4_clt(const Parallel& par) {
    auto c = Cocycle::length(GroupBackend::free_group(2));
    auto m = srw_f2();
    {
        auto rep = clt_suite(c, *m, {125, 250, 500, 1000}, 5000, kSeed, par);
        const auto& last = rep.points.back();
        check(4, "KS distance <= 0.03 at n=1000 with 5e3 samples (F2 length)",
              last.ks_vs_fitted_normal <= 0.03, "KS " + num(last.ks_vs_fitted_normal));
        check(4, "positive limit variance at 5 SE",
              last.sigma2 > 5 * last.sigma2_se,
              "sigma^2 " + num(last.sigma2) + " se " + num(last.sigma2_se));
    }
    {
        auto rep = clt_suite(c, *m, {125, 250, 500, 1000}, 20000, kSeed, par);
        std::string seq;
        for (const auto& pt : rep.points)
            seq += num(pt.ks_vs_fitted_normal) + " ";
        check(4, "KS decreasing along n in {125, 250, 500, 1000}", rep.ks_decreasing,
              "KS by n: " + seq);
    }
    {
        auto z = make_uniform_generators(GroupBackend::integer_line());
        auto cz = Cocycle::length(z->backend());
        auto rep = clt_suite(cz, *z, {1000}, 20000, kSeed, par);
        double ks_normal = rep.points[0].ks_vs_fitted_normal;
        double ks_folded =
            ks_statistic(rep.final_scaled, [](double x) { return half_normal_cdf(x); });
        check(4, "integer-line control flagged non-gaussian, matches folded oracle",
              ks_normal > 0.03 && ks_folded <= 0.05,
              "KS normal " + num(ks_normal) + ", folded " + num(ks_folded));
    }
}

void criterion_5_variance_bounds(const Parallel& par) {
    auto m = srw_f2();
    auto c = Cocycle::length(m->backend());
    auto dev = estimate_deviation_constants(
        c, *m, {{50, 50}, {50, 100}, {50, 200}, {100, 50}, {100, 100}, {100, 200},
                {200, 50}, {200, 100}, {200, 200}},
        {1.0, 2.0, 4.0}, 20000, kSeed, par);

    std::vector<std::size_t> grid = {64, 128, 256, 512, 1024, 2048, 4096};
    auto curve = estimate_variance_curve(c, *m, grid, 4000, kSeed, par, dev.chi_at(2.0),
                                         dev.tau_at(2.0));
    bool within = true;
    std::string detail;
    for (const auto& pt : curve) {
        within = within && pt.within_bound;
        detail += num(pt.var_over_n) + " ";
    }
    check(5, "Var[Q_n]/n <= 4 chi_2 + 16 tau_2 + 5 SE on every grid point", within,
          "var/n: " + detail + "bound " + num(curve[0].bound));

    auto es = efron_stein_check(c, *m, 256, 2500, kSeed, par, dev.chi_at(2.0),
                                dev.tau_at(2.0));
    check(5, "efron-stein: Var[Q_n] <= half-sum of squared influences",
          es.inequality_holds && es.influences_bounded,
          "lhs " + num(es.lhs) + " rhs " + num(es.rhs));

    auto add = additive_sign_cocycle();
    auto es_add = efron_stein_check(add, *m, 256, 2500, kSeed, par, 1.0, 0.0);
    double gap = std::abs(es_add.lhs - es_add.rhs);
    double slack = 3 * std::sqrt(es_add.lhs_se * es_add.lhs_se +
                                 es_add.rhs_se * es_add.rhs_se);
    check(5, "efron-stein additive equality case to 3 SE", gap <= slack,
          "gap " + num(gap) + " slack " + num(slack));

    auto hm = higher_moment_ratio(c, *m, 4.0, grid, 4000, kSeed, par);
    std::string ratios;
    for (const auto& pt : hm.points)
        ratios += num(pt.ratio) + " ";
    check(5, "p=4 moment ratio trend-free across the doubling grid", hm.bounded,
          "ratios: " + ratios + "(MK p " + num(hm.trend_pvalue) + ")");
}

void criterion_6_girsanov(const Parallel& par) {
    auto m0 = srw_f2();
    auto mt = table_f2(0.275, 0.225, 0.25, 0.25);
    const auto& b = m0->backend();

    double worst = 0;
    for (std::size_t n = 1; n <= 4; ++n) {
        auto F = [&](const std::vector<GroupElement>& xs) {
            GroupElement z = b.identity();
            for (const auto& x : xs)
                z = b.multiply(z, x);
            return static_cast<double>(word_length(z));
        };
        double reweighted = enumerate_expectation(
            *m0, n, [&](const std::vector<GroupElement>& xs) {
                double w = 1;
                for (const auto& x : xs)
                    w *= mt->pmf(x) / m0->pmf(x);
                return w * F(xs);
            });
        double direct = enumerate_expectation(*mt, n, F);
        worst = std::max(worst, std::abs(reweighted - direct));
    }
    check(6, "reweighting identity exact under enumeration (n <= 4)", worst <= 1e-12,
          "max error " + num(worst));

    auto F = [](const Trajectory& t) {
        return static_cast<double>(word_length(t.positions.back()));
    };
    auto rew = girsanov_estimate(F, *m0, *mt, 100, 30000, kSeed, par);
    std::vector<double> direct(30000);
    par.for_each_index(direct.size(), [&](std::size_t i) {
        direct[i] = F(generate_trajectory(*mt, 100, kSeed + 1, i, "acc-direct"));
    });
    auto ms = mean_se(direct);
    double gap = std::abs(rew.estimate - ms.value);
    double slack = 3 * std::sqrt(rew.se * rew.se + ms.se * ms.se);
    check(6, "reweighted estimate matches direct simulation within 3 SE", gap <= slack,
          "gap " + num(gap) + " slack " + num(slack) + ", mean weight " +
              num(rew.mean_weight));
}

void criterion_7_speed_derivative(const Parallel& par) {
    auto c = Cocycle::length(GroupBackend::free_group(2));
    {
        // Symmetric tilt: swapping the roles of a and b fixes the word
        // metric, so the derivative vanishes.
        MeasureCurve curve(srw_f2(), table_f2(0.3, 0.3, 0.2, 0.2));
        auto rep = speed_derivative(curve, c, {100, 200, 400}, 8000, kSeed, par);
        check(7, "symmetric-tilt curve: both derivative routes within 3 SE of 0",
              std::abs(rep.covariance) <= 3 * rep.covariance_se &&
                  std::abs(rep.finite_difference) <= 3 * rep.finite_difference_se,
              "cov " + num(rep.covariance) + " (se " + num(rep.covariance_se) + "), fd " +
                  num(rep.finite_difference) + " (se " + num(rep.finite_difference_se) +
                  ")");
        check(7, "symmetric-tilt curve: covariance and finite difference agree",
              rep.agree && rep.sign_consistent,
              "gap " + num(std::abs(rep.covariance - rep.finite_difference)));
    }
    {
        MeasureCurve curve(table_f2(0.3, 0.2, 0.25, 0.25),
                           table_f2(0.36, 0.14, 0.25, 0.25));
        auto rep = speed_derivative(curve, c, {100, 200, 400}, 8000, kSeed, par);
        check(7, "asymmetric curve: covariance and finite difference agree within 3 SE",
              rep.agree && rep.sign_consistent,
              "cov " + num(rep.covariance) + ", fd " + num(rep.finite_difference) +
                  ", combined se " +
                  num(std::sqrt(rep.covariance_se * rep.covariance_se +
                                rep.finite_difference_se * rep.finite_difference_se)));
    }
}

void criterion_8_lipschitz(const Parallel& par) {
    auto c = Cocycle::length(GroupBackend::free_group(2));
    auto m0 = srw_f2();
    struct Pair {
        const char* name;
        MeasurePtr m1;
    };
    std::vector<Pair> pairs = {
        {"2% a-tilt", table_f2(0.255, 0.245, 0.25, 0.25)},
        {"5% a-tilt", table_f2(0.2625, 0.2375, 0.25, 0.25)},
        {"10% a-tilt", table_f2(0.275, 0.225, 0.25, 0.25)},
        {"5% b-tilt", table_f2(0.25, 0.25, 0.2625, 0.2375)},
        {"mixed tilt", table_f2(0.27, 0.24, 0.26, 0.23)},
    };
    for (const auto& [name, m1] : pairs) {
        auto rep = lipschitz_audit(m0, m1, c, 400, 6000, kSeed, par);
        check(8, std::string("lipschitz audit (") + name + "): |dspeed| below C nu",
              rep.within && rep.ratio < rep.constant,
              "ratio " + num(rep.ratio) + " vs C " + num(rep.constant) + " (nu " +
                  num(rep.nu) + ")");
    }
}

void criterion_9_lazy(const Parallel& par) {
    auto cfg = make_cfg("lazy-check", json{{"n_max", 4}},
                        json{{"family", "lazy"},
                             {"q", 0.5},
                             {"base", json{{"family", "uniform_generators"}}}});
    auto result = find_suite("lazy-check")->run(cfg, par);
    check(9, "lazy decomposition exact for n <= 4 (TV, binomial, independence)",
          all_pass(result), criteria_detail(result));
}

void criterion_10_linear_progress(const Parallel& par) {
    {
        auto cfg = make_cfg("linear-progress", json{{"samples", 200000}});
        auto result = find_suite("linear-progress")->run(cfg, par);
        check(10, "linear progress on F2 at C=4: negative slope with R^2 >= 0.9",
              all_pass(result), criteria_detail(result));
    }
    {
        auto cfg = make_cfg("linear-progress", json{{"samples", 50000}}, srw_measure(),
                            json{{"kind", "integer_line"}});
        auto result = find_suite("linear-progress")->run(cfg, par);
        check(10, "integer-line control shows no decay", all_pass(result),
              criteria_detail(result));
    }
}

void criterion_11_determinism() {
    struct Mini {
        const char* suite;
        json params;
        json measure;
        json backend;
        json measure2;
    };
    std::vector<Mini> minis = {
        {"speed", json{{"n", 200}, {"samples", 400}}, srw_measure(), f2_backend(), {}},
        {"deviation",
         json{{"grid", json::array({json::array({20, 20}), json::array({20, 40})})},
              {"thresholds", json::array({0, 2, 4, 6, 8})},
              {"samples", 2000}},
         srw_measure(), f2_backend(), {}},
        {"clt", json{{"n_grid", json::array({50, 100})}, {"samples", 500}},
         srw_measure(), f2_backend(), {}},
        {"green",
         json{{"targets", json::array({"a", "ab"})},
              {"trials", 20000},
              {"adaptive_trials", false},
              {"horizon", 150},
              {"tolerance", 0.2}},
         srw_measure(), f2_backend(), {}},
        {"entropy",
         json{{"n_grid", json::array({4, 6})},
              {"samples", 300},
              {"inner_walks", 40000},
              {"inner_horizon", 150},
              {"tolerance", 0.5}},
         srw_measure(), f2_backend(), {}},
        {"sensitivity",
         json{{"n_grid", json::array({50, 100})},
              {"samples", 500},
              {"girsanov_samples", 500},
              {"enumeration_n", 3},
              {"lipschitz_n", 100}},
         json{{"family", "finite_table"},
              {"support", json::array({json::array({"a", 0.3}), json::array({"A", 0.2}),
                                       json::array({"b", 0.25}),
                                       json::array({"B", 0.25})})}},
         f2_backend(),
         json{{"family", "finite_table"},
              {"support", json::array({json::array({"a", 0.33}), json::array({"A", 0.17}),
                                       json::array({"b", 0.25}),
                                       json::array({"B", 0.25})})}}},
        {"decompose-check",
         json{{"n_max", 64}, {"defect_samples", 2000}, {"brooks_samples", 500}},
         srw_measure(), f2_backend(), {}},
        {"lazy-check", json{{"n_max", 3}},
         json{{"family", "lazy"}, {"q", 0.5},
              {"base", json{{"family", "uniform_generators"}}}},
         f2_backend(), {}},
        {"linear-progress",
         json{{"n_grid", json::array({20, 40, 60})}, {"samples", 5000}}, srw_measure(),
         f2_backend(), {}},
    };
    for (const auto& mini : minis) {
        auto cfg = make_cfg(mini.suite, mini.params, mini.measure, mini.backend,
                            mini.measure2);
        const auto* suite = find_suite(mini.suite);
        std::vector<std::string> outputs;
        for (int workers : {1, 4, 8}) {
            auto result = suite->run(cfg, Parallel(workers));
            std::string bytes = csv_header() + "\n";
            for (const auto& r : result.rows)
                bytes += csv_line(r) + "\n";
            bytes += summary_json(cfg.experiment, cfg.fingerprint, result.criteria, false);
            for (const auto& [name, contents] : result.plots)
                bytes += name + "\n" + contents;
            outputs.push_back(std::move(bytes));
        }
        bool identical = outputs[0] == outputs[1] && outputs[0] == outputs[2];
        check(11, std::string("byte-identical outputs across workers 1/4/8: ") +
                      mini.suite,
              identical, identical ? "identical" : "outputs differ");
    }
}

} // namespace

int main() {
    Parallel par(8);
    std::printf("acceptance suite, seed %llu\n",
                static_cast<unsigned long long>(kSeed));
    try {
        criterion_1_algebraic_identities(par);
        criterion_2_free_group_oracles(par);
        criterion_3_deviation(par);
        criterion_4_clt(par);
        criterion_5_variance_bounds(par);
        criterion_6_girsanov(par);
        criterion_7_speed_derivative(par);
        criterion_8_lipschitz(par);
        criterion_9_lazy(par);
        criterion_10_linear_progress(par);
        criterion_11_determinism();
    } catch (const std::exception& e) {
        std::printf("FATAL: %s\n", e.what());
        return 2;
    }
    std::printf("%s (%d failing)\n", failures == 0 ? "ALL CRITERIA PASS" : "FAILURES",
                failures);
    return failures == 0 ? 0 : 1;
}
