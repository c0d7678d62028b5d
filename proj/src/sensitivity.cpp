#include "clab/sensitivity.hpp"

#include "clab/errors.hpp"
#include "clab/green.hpp"
#include "clab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clab {

double enumerate_expectation(const DrivingMeasure& m, std::size_t n,
                             const TupleStatistic& F, std::size_t budget) {
    double acc = 0;
    enumerate_increment_tuples(
        m, n, [&](const std::vector<GroupElement>& xs, double prob) { acc += prob * F(xs); },
        budget);
    return acc;
}

std::vector<double> exact_expectation_polynomial(const MeasureCurve& curve, std::size_t n,
                                                 const TupleStatistic& F,
                                                 std::size_t budget) {
    const auto& support = curve.support();
    const auto& tbl1 = *curve.mu1()->table();
    double tuples = std::pow(static_cast<double>(support.size()), static_cast<double>(n));
    if (tuples > static_cast<double>(budget))
        throw BudgetError("polynomial expectation: enumeration exceeds the budget");

    std::vector<double> coeffs(n + 1, 0.0);
    std::vector<std::size_t> pick(n, 0);
    std::vector<GroupElement> tuple(n);
    std::vector<double> poly, next;
    auto recurse = [&](auto&& self, std::size_t depth) -> void {
        if (depth == n) {
            // weight(t) = prod_j (mu0_j + t diff_j), expanded by convolution
            poly.assign(1, 1.0);
            for (std::size_t j = 0; j < n; ++j) {
                double p0 = support[pick[j]].second;
                double diff = tbl1[pick[j]].second - p0;
                next.assign(poly.size() + 1, 0.0);
                for (std::size_t d = 0; d < poly.size(); ++d) {
                    next[d] += poly[d] * p0;
                    next[d + 1] += poly[d] * diff;
                }
                poly = next;
            }
            double f = F(tuple);
            for (std::size_t d = 0; d < poly.size(); ++d)
                coeffs[d] += f * poly[d];
            return;
        }
        for (std::size_t i = 0; i < support.size(); ++i) {
            pick[depth] = i;
            tuple[depth] = support[i].first;
            self(self, depth + 1);
        }
    };
    recurse(recurse, 0);
    return coeffs;
}

double polynomial_value(const std::vector<double>& coefficients, double t) {
    double acc = 0;
    for (auto it = coefficients.rbegin(); it != coefficients.rend(); ++it)
        acc = acc * t + *it;
    return acc;
}

GirsanovReport girsanov_estimate(const TrajectoryStatistic& F, const DrivingMeasure& m_base,
                                 const DrivingMeasure& m_target, std::size_t n,
                                 std::size_t samples, std::uint64_t seed,
                                 const Parallel& par) {
    // measure_distance validates support compatibility as a side effect.
    measure_distance(m_base, m_target);
    if (samples < 2)
        throw std::invalid_argument("girsanov: samples >= 2");

    std::vector<double> weighted(samples), weights(samples);
    par.for_each_index(samples, [&](std::size_t i) {
        Trajectory t = generate_trajectory(m_base, n, seed, i, "girsanov");
        double log_ratio = 0;
        for (const auto& x : t.increments)
            log_ratio += m_target.log_pmf(x) - m_base.log_pmf(x);
        double w = std::exp(log_ratio);
        weights[i] = w;
        weighted[i] = w * F(t);
    });

    GirsanovReport out;
    out.samples = samples;
    auto est = mean_se(weighted);
    out.estimate = est.value;
    out.se = est.se;
    auto mw = mean_se(weights);
    out.mean_weight = mw.value;
    out.mean_weight_se = mw.se;
    std::vector<double> w2(samples);
    for (std::size_t i = 0; i < samples; ++i)
        w2[i] = weights[i] * weights[i];
    double sum_w = pairwise_sum(weights);
    double sum_w2 = pairwise_sum(w2);
    out.effective_sample_fraction =
        sum_w2 > 0 ? (sum_w * sum_w) / (static_cast<double>(samples) * sum_w2) : 0.0;
    out.high_variance = out.effective_sample_fraction < 0.1;
    return out;
}

namespace {

// Inverse-CDF draw over the curve's fixed support order, so walks at
// different t share one uniform stream and stay coupled.
std::size_t coupled_pick(const std::vector<double>& cumulative, double u) {
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    std::size_t i = static_cast<std::size_t>(it - cumulative.begin());
    return std::min(i, cumulative.size() - 1);
}

std::vector<double> cumulative_of(const MeasureCurve& curve, double t) {
    const auto& base = curve.support();
    const auto& tbl1 = *curve.mu1()->table();
    std::vector<double> cum(base.size());
    double acc = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        acc += base[i].second + t * (tbl1[i].second - base[i].second);
        cum[i] = acc;
    }
    cum.back() = 1.0;
    return cum;
}

} // namespace

SpeedDerivativeReport speed_derivative(const MeasureCurve& curve, const Cocycle& c,
                                       const std::vector<std::size_t>& n_grid,
                                       std::size_t samples, std::uint64_t seed,
                                       const Parallel& par, double step1, double step2) {
    if (std::abs(curve.martingale_residual()) > 1e-9)
        throw std::invalid_argument(
            "speed derivative: malformed curve, direction is not centered");
    if (n_grid.empty() || samples < 4)
        throw std::invalid_argument("speed derivative: nonempty grid and samples >= 4");
    if (!c.endpoint_kind())
        throw std::invalid_argument("speed derivative: end-point cocycle required");

    std::vector<std::size_t> grid = n_grid;
    std::sort(grid.begin(), grid.end());
    std::size_t n_max = grid.back();
    const GroupBackend& b = curve.mu0()->backend();
    const auto& support = curve.support();

    std::vector<double> cum0 = cumulative_of(curve, 0.0);
    std::vector<double> cum1 = cumulative_of(curve, step1);
    std::vector<double> cum2 = cumulative_of(curve, step2);

    // Per sample: Q at each grid point and M_n under t = 0, plus coupled
    // endpoint values under t = step1 and t = step2.
    std::vector<double> q0(samples * grid.size());
    std::vector<double> m_n(samples);
    std::vector<double> fd_combined(samples);
    par.for_each_index(samples, [&](std::size_t i) {
        std::vector<std::size_t> picks(n_max);
        {
            CounterRng rng = CounterRng::stream(seed, "deriv", i);
            for (std::size_t j = 0; j < n_max; ++j)
                picks[j] = coupled_pick(cum0, rng.uniform01());
        }
        GroupElement pos = b.identity();
        double martingale = 0;
        std::size_t gi = 0;
        for (std::size_t j = 0; j < n_max; ++j) {
            pos = b.multiply(pos, support[picks[j]].first);
            martingale += curve.nu0(picks[j]);
            if (gi < grid.size() && j + 1 == grid[gi]) {
                q0[i * grid.size() + gi] = c.eval_position(pos);
                ++gi;
            }
        }
        m_n[i] = martingale;
        double q_at_0 = q0[i * grid.size() + (grid.size() - 1)];

        auto coupled_endpoint = [&](const std::vector<double>& cum) {
            CounterRng rng = CounterRng::stream(seed, "deriv", i);
            GroupElement p = b.identity();
            for (std::size_t j = 0; j < n_max; ++j)
                p = b.multiply(p, support[coupled_pick(cum, rng.uniform01())].first);
            return c.eval_position(p);
        };
        double d1 = (coupled_endpoint(cum1) - q_at_0) /
                    (step1 * static_cast<double>(n_max));
        double d2 = (coupled_endpoint(cum2) - q_at_0) /
                    (step2 * static_cast<double>(n_max));
        fd_combined[i] = 2 * d2 - d1;
    });

    SpeedDerivativeReport out;
    out.n_grid = grid;
    out.samples = samples;
    out.step1 = step1;
    out.step2 = step2;

    double mbar = mean(m_n);
    std::vector<double> xs(samples);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        double nn = static_cast<double>(grid[gi]);
        for (std::size_t i = 0; i < samples; ++i)
            xs[i] = q0[i * grid.size() + gi];
        double qbar = mean(xs);
        std::vector<double> prod(samples);
        for (std::size_t i = 0; i < samples; ++i)
            prod[i] = (xs[i] - qbar) * (m_n[i] - mbar);
        auto cov = mean_se(prod);
        out.covariance_by_n.push_back(cov.value / nn);
        if (gi + 1 == grid.size()) {
            out.covariance = cov.value / nn;
            out.covariance_se = cov.se / nn;
        }
    }
    if (out.covariance_by_n.size() >= 2)
        out.covariance_stability =
            out.covariance - out.covariance_by_n[out.covariance_by_n.size() - 2];

    auto fd = mean_se(fd_combined);
    out.finite_difference = fd.value;
    out.finite_difference_se = fd.se;

    double gap = std::abs(out.covariance - out.finite_difference);
    double combined = std::sqrt(out.covariance_se * out.covariance_se +
                                out.finite_difference_se * out.finite_difference_se);
    out.agree = gap <= 3 * combined;
    bool cov_sig = std::abs(out.covariance) > 3 * out.covariance_se;
    bool fd_sig = std::abs(out.finite_difference) > 3 * out.finite_difference_se;
    if (cov_sig && fd_sig)
        out.sign_consistent = (out.covariance > 0) == (out.finite_difference > 0);
    return out;
}

LipschitzReport lipschitz_audit(const MeasurePtr& m0, const MeasurePtr& m1,
                                const Cocycle& c, std::size_t n, std::size_t samples,
                                std::uint64_t seed, const Parallel& par,
                                const std::vector<std::pair<std::size_t, std::size_t>>&
                                    tau_grid,
                                std::size_t tau_samples,
                                const std::vector<double>& t_probe) {
    MeasureCurve curve(m0, m1);
    if (!c.endpoint_kind())
        throw std::invalid_argument("lipschitz audit: end-point cocycle required");
    const GroupBackend& b = m0->backend();
    const auto& support = curve.support();

    std::vector<double> cum0 = cumulative_of(curve, 0.0);
    std::vector<double> cum1 = cumulative_of(curve, 1.0);

    std::vector<double> v0(samples), v1(samples), diff(samples);
    par.for_each_index(samples, [&](std::size_t i) {
        auto endpoint = [&](const std::vector<double>& cum) {
            CounterRng rng = CounterRng::stream(seed, "lipschitz", i);
            GroupElement p = b.identity();
            for (std::size_t j = 0; j < n; ++j)
                p = b.multiply(p, support[coupled_pick(cum, rng.uniform01())].first);
            return c.eval_position(p) / static_cast<double>(n);
        };
        v0[i] = endpoint(cum0);
        v1[i] = endpoint(cum1);
        diff[i] = v1[i] - v0[i];
    });

    LipschitzReport out;
    auto s0 = mean_se(v0);
    auto s1 = mean_se(v1);
    out.speed0 = s0.value;
    out.speed0_se = s0.se;
    out.speed1 = s1.value;
    out.speed1_se = s1.se;
    auto d = mean_se(diff);
    out.delta = std::abs(d.value);
    out.delta_se = d.se;
    out.nu = curve.nu_distance();
    out.ratio = out.nu > 0 ? out.delta / out.nu : 0.0;

    // chi_1 of the base measure is exact on the finite support.
    double chi1 = 0;
    for (const auto& [g, p] : support)
        chi1 += p * std::abs(c.eval_position(g));
    out.chi1 = chi1;

    double tau1_max = 0;
    for (double t : t_probe) {
        auto mt = curve.at(t);
        auto dev = estimate_deviation_constants(c, *mt, tau_grid, {1.0}, tau_samples,
                                                seed ^ fnv1a64("lipschitz-tau"), par);
        tau1_max = std::max(tau1_max, dev.tau_at(1.0));
    }
    out.tau1_max = tau1_max;
    // sup_t nu(mu_t, mu_0) along the segment is attained at t = 1.
    out.constant = 2 * (1 + out.nu) * out.chi1 + 4 * tau1_max;
    out.within = out.delta <= out.constant * out.nu + 3 * out.delta_se;
    return out;
}

GreenFluctuationReport green_fluctuation_audit(const MeasurePtr& m0, const MeasurePtr& m1,
                                               int radius, std::size_t horizon,
                                               std::size_t trials, std::uint64_t seed,
                                               const Parallel& par) {
    require_green_preconditions(*m0);
    require_green_preconditions(*m1);
    GreenFluctuationReport out;
    out.nu = measure_distance(*m0, *m1);
    if (!(out.nu > 0))
        throw std::invalid_argument("green fluctuation: measures must differ");
    const GroupBackend& b = m0->backend();

    // Alternating targets a, ab, aba, ... up to the radius.
    std::vector<GroupElement> targets;
    {
        std::vector<Gen> letters;
        for (int len = 1; len <= radius; ++len) {
            letters.push_back(Gen{static_cast<std::uint8_t>(len % 2 == 1 ? 0 : 1), +1});
            targets.push_back(b.normalize(letters));
        }
    }

    // Hitting trials recording first-hit times for the conditional means.
    auto probe = [&](const DrivingMeasure& m, const GroupElement& z, double& dist,
                     double& se, double& cond_ratio) {
        std::vector<std::uint32_t> hit_time(trials, 0);
        std::uint64_t key = seed ^ fnv1a64(b.render(z)) ^ fnv1a64(m.fingerprint());
        par.for_each_index(trials, [&](std::size_t i) {
            CounterRng rng = CounterRng::stream(key, "greenfluc", i);
            std::vector<Gen> quotient_rev(z.letters.rbegin(), z.letters.rend());
            for (std::size_t j = 1; j <= horizon; ++j) {
                GroupElement x = m.sample(rng);
                for (const Gen& g : x.letters)
                    b.append_letter(quotient_rev,
                                    Gen{g.index, static_cast<std::int8_t>(-g.sign)});
                if (quotient_rev.empty()) {
                    hit_time[i] = static_cast<std::uint32_t>(j);
                    return;
                }
            }
        });
        std::uint64_t hits = 0, time_sum = 0;
        for (std::uint32_t t : hit_time) {
            hits += t > 0;
            time_sum += t;
        }
        GreenEstimate est;
        est.target = z;
        est.horizon = horizon;
        est.trials = trials;
        est.hits = hits;
        est.infinite = hits == 0;
        dist = est.distance();
        se = est.se();
        cond_ratio = hits > 0 ? static_cast<double>(time_sum) / static_cast<double>(hits) /
                                    static_cast<double>(word_length(z))
                              : 0.0;
    };

    for (const auto& z : targets) {
        GreenFluctuationPoint pt;
        pt.target = z;
        double c0 = 0, c1 = 0;
        probe(*m0, z, pt.d0, pt.d0_se, c0);
        probe(*m1, z, pt.d1, pt.d1_se, c1);
        pt.conditional_hits0 = c0;
        pt.conditional_hits1 = c1;
        pt.normalized_gap =
            std::abs(pt.d1 - pt.d0) / (out.nu * static_cast<double>(word_length(z)));
        out.max_normalized_gap = std::max(out.max_normalized_gap, pt.normalized_gap);
        out.max_conditional_hitting_ratio =
            std::max({out.max_conditional_hitting_ratio, c0, c1});
        out.points.push_back(pt);
    }
    return out;
}

} // namespace clab
