#include <doctest.h>

#include "clab/errors.hpp"
#include "clab/estimators.hpp"

#include <cmath>

using namespace clab;

namespace {

const Parallel par(4);

MeasurePtr srw_f2() { return make_uniform_generators(GroupBackend::free_group(2)); }
MeasurePtr srw_z() { return make_uniform_generators(GroupBackend::integer_line()); }

Cocycle zero_cocycle() {
    return Cocycle::additive("zero", [](const GroupElement&) { return 0.0; });
}

} // namespace

TEST_CASE("speed of the simple random walk on F2") {
    auto m = srw_f2();
    auto c = Cocycle::length(m->backend());
    auto report = estimate_speed(c, *m, 1000, 2000, 11, par, 1.5);
    CHECK(std::abs(report.value - 0.5) < 0.01);
    REQUIRE(report.speed_bracket.has_value());
    CHECK(report.speed_bracket->first == doctest::Approx(report.value - 1.5 / 1000));
    CHECK(report.speed_bracket->second == doctest::Approx(report.value + 1.5 / 1000));
}

TEST_CASE("speed on the integer line is diffusive") {
    auto m = srw_z();
    auto c = Cocycle::length(m->backend());
    const std::size_t n = 10000;
    auto report = estimate_speed(c, *m, n, 500, 12, par);
    double expected = std::sqrt(2.0 / (3.14159265358979 * static_cast<double>(n)));
    CHECK(report.value > 0.5 * expected);
    CHECK(report.value < 1.5 * expected);
}

TEST_CASE("lazy walk speed scales by 1 - q") {
    auto m = make_lazy(0.5, srw_f2());
    auto c = Cocycle::length(m->backend());
    auto report = estimate_speed(c, *m, 1000, 2000, 13, par);
    CHECK(std::abs(report.value - 0.25) < 0.01);
}

TEST_CASE("deviation constants") {
    auto m = srw_f2();
    auto c = Cocycle::length(m->backend());
    auto dev = estimate_deviation_constants(c, *m, {{10, 10}, {25, 50}, {50, 50}},
                                            {1.0, 2.0}, 4000, 14, par);
    CHECK(dev.chi_at(1.0) == doctest::Approx(1.0)); // |Q_1| = 1 on generators
    CHECK(dev.chi_at(2.0) == doctest::Approx(1.0));
    CHECK(dev.tau_at(1.0) > 0);
    CHECK(dev.tau_at(2.0) >= dev.tau_at(1.0));

    auto add = additive_sign_cocycle();
    auto dev_add = estimate_deviation_constants(add, *m, {{10, 10}}, {2.0}, 500, 15, par);
    CHECK(dev_add.tau_at(2.0) == 0.0);
    CHECK(dev_add.chi_at(2.0) == doctest::Approx(1.0));
}

TEST_CASE("variance curve") {
    SUBCASE("additive +-1 sums have variance ratio 1") {
        auto m = srw_f2();
        auto c = additive_sign_cocycle();
        auto curve = estimate_variance_curve(c, *m, {64, 256}, 3000, 16, par, 1.0, 0.0);
        for (const auto& pt : curve) {
            CHECK(std::abs(pt.var_over_n - 1.0) < 0.1);
            CHECK(pt.within_bound); // bound is 4 here
        }
    }
    SUBCASE("constant cocycle has zero variance") {
        auto m = srw_f2();
        auto curve = estimate_variance_curve(zero_cocycle(), *m, {32}, 100, 17, par, 0.0, 0.0);
        CHECK(curve[0].var_over_n == 0.0);
        CHECK(curve[0].within_bound);
    }
    SUBCASE("length on F2 stabilizes to a positive limit under the bound") {
        auto m = srw_f2();
        auto c = Cocycle::length(m->backend());
        auto dev = estimate_deviation_constants(c, *m, {{32, 32}, {64, 64}}, {2.0}, 3000,
                                                18, par);
        auto curve = estimate_variance_curve(c, *m, {64, 128, 256, 512, 1024}, 2000, 19,
                                             par, dev.chi_at(2.0), dev.tau_at(2.0));
        for (const auto& pt : curve) {
            CHECK(pt.var_over_n > 5 * pt.se); // strictly positive limit
            CHECK(pt.within_bound);
        }
        // Hammersley-style surrogate: successive differences do not diverge.
        std::vector<double> diffs;
        for (std::size_t i = 1; i < curve.size(); ++i)
            diffs.push_back(std::abs(curve[i].var_over_n - curve[i - 1].var_over_n));
        CHECK(mann_kendall_pvalue_increasing(diffs) > 0.01);
    }
}

TEST_CASE("deviation tails") {
    auto m = srw_f2();
    auto c = Cocycle::length(m->backend());

    SUBCASE("threshold zero always survives, empty windows never do") {
        auto fit = deviation_tail(c, *m, {{0, 40}, {40, 0}}, {0.0, 1.0, 2.0}, 400, 20, par);
        CHECK(fit.survival[0] == 1.0);
        // with n = 0 or m = 0 the defect vanishes identically
        CHECK(fit.survival[1] == 0.0);
        CHECK(fit.degenerate); // a single usable bin cannot be fitted
    }

    SUBCASE("exponential tail on the tree") {
        std::vector<std::pair<std::size_t, std::size_t>> grid = {
            {50, 50}, {50, 100}, {100, 50}, {100, 100}};
        std::vector<double> thresholds;
        for (int t = 0; t <= 14; t += 2)
            thresholds.push_back(t);
        auto fit = deviation_tail(c, *m, grid, thresholds, 20000, 21, par);
        CHECK_FALSE(fit.degenerate);
        CHECK(fit.rate > 0.3);
        CHECK(fit.cell_rates.size() == grid.size());
        CHECK(fit.rate_spread < 0.2);
        for (std::size_t i = 1; i < fit.survival.size(); ++i)
            CHECK(fit.survival[i] <= fit.survival[i - 1]);
    }
}

TEST_CASE("higher moments") {
    SUBCASE("p = 2 agrees with the variance curve") {
        auto m = srw_f2();
        auto c = Cocycle::length(m->backend());
        auto hm = higher_moment_ratio(c, *m, 2.0, {128, 256}, 3000, 22, par);
        auto vc = estimate_variance_curve(c, *m, {128, 256}, 3000, 23, par, 1.0, 10.0);
        for (std::size_t i = 0; i < hm.points.size(); ++i)
            CHECK(std::abs(hm.points[i].ratio - vc[i].var_over_n) <
                  0.05 + 10 * vc[i].se);
    }
    SUBCASE("additive +-1 fourth moment approaches the gaussian value") {
        auto m = srw_z();
        auto c = additive_sign_cocycle();
        auto hm = higher_moment_ratio(c, *m, 4.0, {128, 256, 512, 1024}, 4000, 24, par);
        CHECK(hm.bounded);
        CHECK(std::abs(hm.points.back().ratio - 3.0) < 0.5);
    }
    SUBCASE("length on F2 is trend-free at p = 4") {
        auto m = srw_f2();
        auto c = Cocycle::length(m->backend());
        auto hm = higher_moment_ratio(c, *m, 4.0, {64, 128, 256, 512, 1024}, 3000, 25, par);
        CHECK(hm.bounded);
    }
}

TEST_CASE("efron-stein") {
    SUBCASE("constant cocycle gives 0 = 0") {
        auto m = srw_f2();
        auto rep = efron_stein_check(zero_cocycle(), *m, 16, 200, 26, par, 0.0, 0.0);
        CHECK(rep.lhs == 0.0);
        CHECK(rep.rhs == 0.0);
        CHECK(rep.inequality_holds);
    }
    SUBCASE("additive cocycles attain equality") {
        auto m = srw_f2();
        auto c = additive_sign_cocycle();
        auto rep = efron_stein_check(c, *m, 64, 3000, 27, par, 1.0, 0.0);
        CHECK(std::abs(rep.lhs - rep.rhs) <=
              3 * std::sqrt(rep.lhs_se * rep.lhs_se + rep.rhs_se * rep.rhs_se));
        CHECK(rep.inequality_holds);
        CHECK(rep.influences_bounded);
        // E (f(X) - f(X'))^2 = 2 Var f = 2 for the sign sum.
        for (double infl : rep.influence)
            CHECK(std::abs(infl - 2.0) < 0.5);
    }
    SUBCASE("length on F2 holds with slack") {
        auto m = srw_f2();
        auto c = Cocycle::length(m->backend());
        auto dev = estimate_deviation_constants(c, *m, {{64, 64}, {128, 128}}, {2.0}, 3000,
                                                28, par);
        auto rep = efron_stein_check(c, *m, 128, 1500, 29, par, dev.chi_at(2.0),
                                     dev.tau_at(2.0));
        CHECK(rep.inequality_holds);
        CHECK(rep.influences_bounded);
        CHECK(rep.lhs > 0);
        CHECK(rep.rhs > rep.lhs); // strict slack expected on the tree
    }
}

TEST_CASE("clt suite") {
    SUBCASE("classical oracle: +-1 sums at n = 1000") {
        auto m = srw_z();
        auto c = additive_sign_cocycle();
        auto rep = clt_suite(c, *m, {1000}, 5000, 30, par);
        CHECK(rep.points[0].ks_vs_fitted_normal <= 0.02);
        CHECK(std::abs(rep.points[0].sigma2 - 1.0) < 0.1);
        CHECK_FALSE(rep.degenerate_variance);
    }
    SUBCASE("length on F2 is near gaussian and improves with n") {
        auto m = srw_f2();
        auto c = Cocycle::length(m->backend());
        auto rep = clt_suite(c, *m, {250, 1000}, 6000, 31, par);
        CHECK(rep.points.back().ks_vs_fitted_normal <= 0.03);
        CHECK(rep.ks_decreasing);
        CHECK(rep.points.back().sigma2 > 5 * rep.points.back().sigma2_se);
        CHECK(rep.qq.size() == 99);
    }
    SUBCASE("integer line length is flagged non-gaussian, matches folded normal") {
        auto m = srw_z();
        auto c = Cocycle::length(m->backend());
        auto rep = clt_suite(c, *m, {1000}, 5000, 32, par);
        double ks_normal = rep.points[0].ks_vs_fitted_normal;
        CHECK(ks_normal > 0.03);
        // |S_n| / sqrt(n) follows the half-normal law; the remaining KS gap
        // is the parity-lattice floor of order 1/sqrt(n).
        double ks_folded =
            ks_statistic(rep.final_scaled, [](double x) { return half_normal_cdf(x); });
        CHECK(ks_folded <= 0.05);
        CHECK(ks_folded < 0.5 * ks_normal);
        // Var(|S_n|)/n approaches 1 - 2/pi.
        CHECK(std::abs(rep.points[0].sigma2 - 0.36338) < 0.03);
    }
}

TEST_CASE("linear progress") {
    SUBCASE("n = 0 survives trivially") {
        auto m = srw_f2();
        auto rep = linear_progress_tail(*m, 4.0, {0, 40}, 2000, 33, par);
        CHECK(rep.points[0].survival == 1.0);
    }
    SUBCASE("geometric decay on the tree at C = 4") {
        auto m = srw_f2();
        auto rep = linear_progress_tail(*m, 4.0, {40, 60, 80, 100}, 30000, 34, par);
        CHECK(rep.fit_valid);
        CHECK(rep.decays);
        CHECK(rep.log_fit.slope < 0);
        CHECK(rep.log_fit.r2 >= 0.9);
    }
    SUBCASE("integer line shows no decay") {
        auto m = srw_z();
        auto rep = linear_progress_tail(*m, 4.0, {40, 60, 80, 100}, 5000, 35, par);
        CHECK(rep.final_survival > 0.9);
    }
}

TEST_CASE("lazy decomposition by exact enumeration") {
    auto m = make_lazy(0.5, srw_f2());
    for (std::size_t n : {1, 2, 3, 4}) {
        auto rep = lazy_decomposition_check(*m, n);
        CHECK(rep.max_tv <= 1e-10);
        CHECK(rep.binomial_max_error <= 1e-12);
        CHECK(rep.independence_max_error <= 1e-12);
        CHECK(rep.idle_probability == doctest::Approx(0.5));
    }
    CHECK_THROWS_AS(lazy_decomposition_check(*m, 20), BudgetError);
    CHECK_THROWS_AS(lazy_decomposition_check(*srw_f2(), 2), std::invalid_argument);
}

TEST_CASE("subadditive bracket on exact means") {
    auto m = srw_f2();
    auto c = Cocycle::length(m->backend());
    auto dev = estimate_deviation_constants(c, *m, {{1, 1}, {2, 2}, {2, 4}, {3, 3}}, {1.0},
                                            6000, 36, par);
    double tau1 = dev.tau_at(1.0);
    double se_proxy = 3.0 / std::sqrt(6000.0);
    for (int n = 1; n <= 3; ++n) {
        for (int k = 1; n + k <= 6; ++k) {
            double gap = std::abs(exact_endpoint_mean(c, *m, n + k) -
                                  exact_endpoint_mean(c, *m, n) -
                                  exact_endpoint_mean(c, *m, k));
            CHECK(gap <= tau1 + 3 * se_proxy);
        }
    }
}

TEST_CASE("estimator reruns are deterministic") {
    auto m = srw_f2();
    auto c = Cocycle::length(m->backend());
    auto a = estimate_speed(c, *m, 200, 500, 37, Parallel(1));
    auto b = estimate_speed(c, *m, 200, 500, 37, Parallel(8));
    CHECK(a.value == b.value);
    CHECK(a.se == b.se);
}
