#include "clab/estimators.hpp"

#include "clab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace clab {

namespace {

// Q_n of a fresh walk from the (seed, tag, index) substream.
double final_q(const Cocycle& c, const DrivingMeasure& m, std::size_t n,
               std::uint64_t seed, const std::string& tag, std::uint64_t index) {
    WalkStream w(m, seed, index, tag);
    if (c.kind() == Cocycle::Kind::AdditiveSum) {
        double acc = 0;
        for (std::size_t j = 0; j < n; ++j) {
            w.step();
            acc += c.eval_increment(w.last_increment());
        }
        return acc;
    }
    for (std::size_t j = 0; j < n; ++j)
        w.step();
    return c.eval_position(w.position());
}

double endpoint_defect(const Cocycle& c, const GroupBackend& b, const GroupElement& z_n,
                       const GroupElement& z_nm) {
    return c.eval_position(z_nm) - c.eval_position(z_n) -
           c.eval_position(b.left_quotient(z_n, z_nm));
}

// |Psi_{n,m}| of a fresh walk.
double abs_defect_sample(const Cocycle& c, const DrivingMeasure& m, std::size_t n,
                         std::size_t k, std::uint64_t seed, const std::string& tag,
                         std::uint64_t index) {
    if (c.kind() == Cocycle::Kind::AdditiveSum)
        return 0.0;
    WalkStream w(m, seed, index, tag);
    for (std::size_t j = 0; j < n; ++j)
        w.step();
    GroupElement z_n = w.position();
    for (std::size_t j = 0; j < k; ++j)
        w.step();
    return std::abs(endpoint_defect(c, m.backend(), z_n, w.position()));
}

double normal_quantile(double u) {
    double lo = -12, hi = 12;
    for (int i = 0; i < 80; ++i) {
        double mid = 0.5 * (lo + hi);
        (normal_cdf(mid) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace

DeviationConstants estimate_deviation_constants(
    const Cocycle& c, const DrivingMeasure& m,
    std::vector<std::pair<std::size_t, std::size_t>> grid, std::vector<double> moments,
    std::size_t samples, std::uint64_t seed, const Parallel& par) {
    if (grid.empty() || moments.empty() || samples < 2)
        throw std::invalid_argument("deviation constants: nonempty grid, moments, samples >= 2");
    DeviationConstants out;
    out.grid = std::move(grid);
    out.samples_per_cell = samples;

    std::vector<double> abs_psi(out.grid.size() * samples, 0.0);
    if (c.kind() != Cocycle::Kind::AdditiveSum) {
        par.for_each_index(abs_psi.size(), [&](std::size_t idx) {
            std::size_t cell = idx / samples;
            abs_psi[idx] = abs_defect_sample(c, m, out.grid[cell].first,
                                             out.grid[cell].second, seed, "devconst", idx);
        });
    }

    for (double p : moments) {
        double worst = 0;
        for (std::size_t cell = 0; cell < out.grid.size(); ++cell) {
            std::vector<double> powed(samples);
            for (std::size_t i = 0; i < samples; ++i)
                powed[i] = std::pow(abs_psi[cell * samples + i], p);
            worst = std::max(worst, mean(powed));
        }
        out.tau[p] = worst;

        if (const auto* tbl = m.table()) {
            double acc = 0;
            for (const auto& [g, prob] : *tbl) {
                double q1 = c.kind() == Cocycle::Kind::AdditiveSum ? c.eval_increment(g)
                                                                   : c.eval_position(g);
                acc += prob * std::pow(std::abs(q1), p);
            }
            out.chi[p] = acc;
        } else {
            std::vector<double> powed(samples);
            par.for_each_index(samples, [&](std::size_t i) {
                CounterRng rng = CounterRng::stream(seed, "chimoment", i);
                GroupElement x = m.sample(rng);
                double q1 = c.kind() == Cocycle::Kind::AdditiveSum ? c.eval_increment(x)
                                                                   : c.eval_position(x);
                powed[i] = std::pow(std::abs(q1), p);
            });
            out.chi[p] = mean(powed);
        }
    }
    return out;
}

EstimateReport estimate_speed(const Cocycle& c, const DrivingMeasure& m, std::size_t n,
                              std::size_t samples, std::uint64_t seed, const Parallel& par,
                              std::optional<double> tau1) {
    if (n < 1 || samples < 2)
        throw std::invalid_argument("estimate_speed: need n >= 1 and samples >= 2");
    std::vector<double> values(samples);
    par.for_each_index(samples, [&](std::size_t i) {
        values[i] = final_q(c, m, n, seed, "speed", i) / static_cast<double>(n);
    });
    auto ms = mean_se(values);
    EstimateReport report;
    report.value = ms.value;
    report.se = ms.se;
    report.samples = samples;
    report.n_grid = {n};
    report.method = "mean of Q_n/n over fresh trajectories";
    if (tau1) {
        double nn = static_cast<double>(n);
        report.speed_bracket = std::make_pair(ms.value - *tau1 / nn, ms.value + *tau1 / nn);
    }
    return report;
}

std::vector<VariancePoint> estimate_variance_curve(const Cocycle& c, const DrivingMeasure& m,
                                                   const std::vector<std::size_t>& n_grid,
                                                   std::size_t samples, std::uint64_t seed,
                                                   const Parallel& par, double chi2,
                                                   double tau2) {
    if (n_grid.empty() || samples < 4)
        throw std::invalid_argument("variance curve: nonempty grid and samples >= 4");
    std::vector<double> q(n_grid.size() * samples, 0.0);
    par.for_each_index(q.size(), [&](std::size_t idx) {
        std::size_t cell = idx / samples;
        q[idx] = final_q(c, m, n_grid[cell], seed, "varcurve", idx);
    });
    double bound = 4 * chi2 + 16 * tau2;
    std::vector<VariancePoint> out;
    for (std::size_t cell = 0; cell < n_grid.size(); ++cell) {
        std::span<const double> xs(q.data() + cell * samples, samples);
        VariancePoint pt;
        pt.n = n_grid[cell];
        double nn = static_cast<double>(pt.n);
        pt.var_over_n = sample_variance(xs) / nn;
        pt.se = sample_variance_se(xs) / nn;
        pt.bound = bound;
        pt.within_bound = pt.var_over_n <= bound + 5 * pt.se;
        out.push_back(pt);
    }
    return out;
}

TailFit deviation_tail(const Cocycle& c, const DrivingMeasure& m,
                       const std::vector<std::pair<std::size_t, std::size_t>>& grid,
                       const std::vector<double>& thresholds, std::size_t samples,
                       std::uint64_t seed, const Parallel& par) {
    if (grid.empty() || thresholds.empty() || samples < 2)
        throw std::invalid_argument("deviation tail: nonempty grids and samples >= 2");
    if (m.tail_class() == TailClass::Superexponential)
        throw std::invalid_argument(
            "deviation tail: measure must declare a finite or exponential tail");

    std::vector<double> abs_psi(grid.size() * samples, 0.0);
    par.for_each_index(abs_psi.size(), [&](std::size_t idx) {
        std::size_t cell = idx / samples;
        abs_psi[idx] = abs_defect_sample(c, m, grid[cell].first, grid[cell].second, seed,
                                         "tail", idx);
    });

    TailFit fit;
    fit.thresholds = thresholds;
    fit.survival.assign(thresholds.size(), 0.0);

    auto fit_cell = [&](const std::vector<double>& survival, double& rate_out,
                        double& intercept_out, double& rms_out, std::size_t& bins_out) {
        std::vector<double> xs, ys;
        for (std::size_t i = 0; i < thresholds.size(); ++i) {
            if (survival[i] > 0) {
                xs.push_back(thresholds[i]);
                ys.push_back(std::log(survival[i]));
            }
        }
        bins_out = xs.size();
        if (xs.size() < 4)
            return false;
        auto lf = least_squares(xs, ys);
        rate_out = -lf.slope;
        intercept_out = lf.intercept;
        double ss = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double r = ys[i] - lf.intercept - lf.slope * xs[i];
            ss += r * r;
        }
        rms_out = std::sqrt(ss / static_cast<double>(xs.size()));
        return true;
    };

    std::vector<double> cell_survival(thresholds.size());
    for (std::size_t cell = 0; cell < grid.size(); ++cell) {
        std::span<const double> xs(abs_psi.data() + cell * samples, samples);
        for (std::size_t ti = 0; ti < thresholds.size(); ++ti) {
            std::size_t count = 0;
            for (double v : xs)
                count += v >= thresholds[ti];
            cell_survival[ti] = static_cast<double>(count) / static_cast<double>(samples);
            fit.survival[ti] = std::max(fit.survival[ti], cell_survival[ti]);
        }
        double rate = 0, intercept = 0, rms = 0;
        std::size_t bins = 0;
        if (fit_cell(cell_survival, rate, intercept, rms, bins))
            fit.cell_rates.push_back(rate);
    }

    fit.degenerate =
        !fit_cell(fit.survival, fit.rate, fit.log_prefactor, fit.fit_rms, fit.usable_bins);
    if (!fit.cell_rates.empty()) {
        double avg = mean(fit.cell_rates);
        for (double b : fit.cell_rates)
            fit.rate_spread = std::max(fit.rate_spread, std::abs(b / avg - 1));
    }
    return fit;
}

HigherMomentReport higher_moment_ratio(const Cocycle& c, const DrivingMeasure& m, double p,
                                       const std::vector<std::size_t>& n_grid,
                                       std::size_t samples, std::uint64_t seed,
                                       const Parallel& par) {
    if (p <= 1)
        throw std::invalid_argument("higher moments: p must exceed 1");
    if (n_grid.empty() || samples < 4)
        throw std::invalid_argument("higher moments: nonempty grid and samples >= 4");
    std::vector<double> q(n_grid.size() * samples, 0.0);
    par.for_each_index(q.size(), [&](std::size_t idx) {
        std::size_t cell = idx / samples;
        q[idx] = final_q(c, m, n_grid[cell], seed, "higherm", idx);
    });
    HigherMomentReport out;
    out.p = p;
    std::vector<double> ratios;
    for (std::size_t cell = 0; cell < n_grid.size(); ++cell) {
        std::span<const double> xs(q.data() + cell * samples, samples);
        HigherMomentPoint pt;
        pt.n = n_grid[cell];
        pt.ratio =
            central_moment(xs, p) / std::pow(static_cast<double>(pt.n), p / 2.0);
        out.points.push_back(pt);
        ratios.push_back(pt.ratio);
    }
    out.trend_pvalue = mann_kendall_pvalue_increasing(ratios);
    out.bounded = out.trend_pvalue > 0.01;
    return out;
}

EfronSteinReport efron_stein_check(const Cocycle& c, const DrivingMeasure& m, std::size_t n,
                                   std::size_t samples, std::uint64_t seed,
                                   const Parallel& par, double chi2, double tau2) {
    if (n < 1 || samples < 4)
        throw std::invalid_argument("efron-stein: need n >= 1 and samples >= 4");
    const GroupBackend& b = m.backend();
    std::vector<double> q_n(samples, 0.0);
    std::vector<double> sq(samples * n, 0.0); // (Q^{(k)} - Q)^2 rows per sample

    par.for_each_index(samples, [&](std::size_t i) {
        Trajectory t = generate_trajectory(m, n, seed, i, "efron");
        CounterRng rep = CounterRng::stream(seed, "efronrep", i);
        if (c.kind() == Cocycle::Kind::AdditiveSum) {
            double acc = 0;
            for (std::size_t k = 1; k <= n; ++k) {
                double d = c.eval_increment(m.sample(rep)) -
                           c.eval_increment(t.increments[k - 1]);
                sq[i * n + (k - 1)] = d * d;
                acc += c.eval_increment(t.increments[k - 1]);
            }
            q_n[i] = acc;
            return;
        }
        q_n[i] = c.eval_position(t.positions[n]);
        // suffix[k] = Z_k^{-1} Z_n, built backwards.
        std::vector<GroupElement> suffix(n + 1);
        suffix[n] = b.identity();
        for (std::size_t k = n; k >= 1; --k)
            suffix[k - 1] = b.multiply(t.increments[k - 1], suffix[k]);
        for (std::size_t k = 1; k <= n; ++k) {
            GroupElement replaced =
                b.multiply(b.multiply(t.positions[k - 1], m.sample(rep)), suffix[k]);
            double d = c.eval_position(replaced) - q_n[i];
            sq[i * n + (k - 1)] = d * d;
        }
    });

    EfronSteinReport out;
    out.n = n;
    out.lhs = sample_variance(q_n);
    out.lhs_se = sample_variance_se(q_n);

    std::vector<double> row_half_sum(samples);
    std::vector<double> column(samples);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < samples; ++i)
            column[i] = sq[i * n + k];
        auto ms = mean_se(column);
        out.influence.push_back(ms.value);
        out.influence_se.push_back(ms.se);
    }
    for (std::size_t i = 0; i < samples; ++i) {
        std::span<const double> row(sq.data() + i * n, n);
        row_half_sum[i] = 0.5 * pairwise_sum(row);
    }
    auto rhs = mean_se(row_half_sum);
    out.rhs = rhs.value;
    out.rhs_se = rhs.se;

    out.influence_bound = 8 * chi2 + 32 * tau2;
    out.inequality_holds =
        out.lhs <= out.rhs + 3 * std::sqrt(out.lhs_se * out.lhs_se + out.rhs_se * out.rhs_se);
    out.influences_bounded = true;
    for (std::size_t k = 0; k < n; ++k)
        if (out.influence[k] > out.influence_bound + 3 * out.influence_se[k])
            out.influences_bounded = false;
    return out;
}

CltReport clt_suite(const Cocycle& c, const DrivingMeasure& m,
                    const std::vector<std::size_t>& n_grid, std::size_t samples,
                    std::uint64_t seed, const Parallel& par) {
    if (n_grid.empty() || samples < 100)
        throw std::invalid_argument("clt suite: nonempty grid and samples >= 100");
    std::vector<std::size_t> grid = n_grid;
    std::sort(grid.begin(), grid.end());
    std::size_t n_max = grid.back();

    // Common random numbers: one walk per sample, read at every grid point.
    std::vector<double> q(samples * grid.size(), 0.0);
    par.for_each_index(samples, [&](std::size_t i) {
        WalkStream w(m, seed, i, "clt");
        double additive_acc = 0;
        std::size_t gi = 0;
        for (std::size_t j = 1; j <= n_max; ++j) {
            w.step();
            if (c.kind() == Cocycle::Kind::AdditiveSum)
                additive_acc += c.eval_increment(w.last_increment());
            if (gi < grid.size() && j == grid[gi]) {
                q[i * grid.size() + gi] = c.kind() == Cocycle::Kind::AdditiveSum
                                              ? additive_acc
                                              : c.eval_position(w.position());
                ++gi;
            }
        }
    });

    CltReport out;
    out.samples = samples;
    std::vector<double> xs(samples);
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        for (std::size_t i = 0; i < samples; ++i)
            xs[i] = q[i * grid.size() + gi];
        CltPoint pt;
        pt.n = grid[gi];
        double nn = static_cast<double>(pt.n);
        double mu = mean(xs);
        pt.sigma2 = sample_variance(xs) / nn;
        pt.sigma2_se = sample_variance_se(xs) / nn;
        pt.skewness = skewness(xs);
        pt.excess_kurtosis = excess_kurtosis(xs);
        std::vector<double> w(samples);
        for (std::size_t i = 0; i < samples; ++i)
            w[i] = (xs[i] - mu) / std::sqrt(nn);
        if (pt.sigma2 < 1e-6) {
            pt.ks_vs_fitted_normal = 1.0;
        } else {
            double sigma = std::sqrt(pt.sigma2);
            pt.ks_vs_fitted_normal =
                ks_statistic(w, [sigma](double x) { return normal_cdf(x / sigma); });
        }
        out.points.push_back(pt);

        if (gi + 1 == grid.size()) {
            out.degenerate_variance = pt.sigma2 < 1e-6;
            out.final_scaled.resize(samples);
            for (std::size_t i = 0; i < samples; ++i)
                out.final_scaled[i] = xs[i] / std::sqrt(nn);
            std::vector<double> sorted = w;
            std::sort(sorted.begin(), sorted.end());
            double sigma = std::sqrt(std::max(pt.sigma2, 1e-300));
            for (int k = 1; k < 100; ++k) {
                double u = k / 100.0;
                double sq = sorted[static_cast<std::size_t>(u * (samples - 1))];
                out.qq.emplace_back(sigma * normal_quantile(u), sq);
            }
        }
    }
    out.ks_decreasing = true;
    for (std::size_t gi = 1; gi < out.points.size(); ++gi)
        if (out.points[gi].ks_vs_fitted_normal >= out.points[gi - 1].ks_vs_fitted_normal)
            out.ks_decreasing = false;
    return out;
}

LinearProgressReport linear_progress_tail(const DrivingMeasure& m, double progress_constant,
                                          const std::vector<std::size_t>& n_grid,
                                          std::size_t samples, std::uint64_t seed,
                                          const Parallel& par) {
    if (n_grid.empty() || samples < 2 || progress_constant <= 0)
        throw std::invalid_argument("linear progress: bad parameters");
    std::vector<std::size_t> grid = n_grid;
    std::sort(grid.begin(), grid.end());
    std::size_t n_max = grid.back();

    std::vector<double> hits(samples * grid.size(), 0.0);
    par.for_each_index(samples, [&](std::size_t i) {
        WalkStream w(m, seed, i, "linprog");
        std::size_t gi = 0;
        for (std::size_t j = 0; j <= n_max; ++j) {
            if (gi < grid.size() && j == grid[gi]) {
                double d = static_cast<double>(word_length(w.position()));
                hits[i * grid.size() + gi] =
                    d <= static_cast<double>(j) / progress_constant ? 1.0 : 0.0;
                ++gi;
            }
            if (j < n_max)
                w.step();
        }
    });

    LinearProgressReport out;
    out.progress_constant = progress_constant;
    std::vector<double> xs, ys;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        LinearProgressPoint pt;
        pt.n = grid[gi];
        std::vector<double> col(samples);
        for (std::size_t i = 0; i < samples; ++i)
            col[i] = hits[i * grid.size() + gi];
        pt.survival = mean(col);
        out.points.push_back(pt);
        if (pt.survival > 0) {
            xs.push_back(static_cast<double>(pt.n));
            ys.push_back(std::log(pt.survival));
        }
    }
    out.final_survival = out.points.back().survival;
    out.fit_valid = xs.size() >= 3;
    if (out.fit_valid) {
        out.log_fit = least_squares(xs, ys);
        out.decays = out.log_fit.slope < 0 && out.log_fit.r2 >= 0.9 &&
                     xs.size() == grid.size();
    }
    return out;
}

LazyDecompositionReport lazy_decomposition_check(const DrivingMeasure& m, std::size_t n,
                                                 std::size_t budget) {
    if (!(m.mass_at_id() > 0))
        throw std::invalid_argument("lazy decomposition: measure needs mass at the identity");
    const GroupBackend& b = m.backend();
    double q0 = m.mass_at_id();
    MeasurePtr stripped = lazify(std::shared_ptr<const DrivingMeasure>(&m, [](auto*) {}));

    // Exact laws of the stripped walk, by convolution (the oracle side).
    std::vector<ExactDistribution> tilde_laws;
    for (std::size_t j = 0; j <= n; ++j)
        tilde_laws.push_back(convolution_power(b, *stripped, static_cast<int>(j)));

    std::vector<std::map<GroupElement, double>> joint(n + 1);
    std::vector<double> law_idle(n + 1, 0.0);
    double independence_err = 0;

    enumerate_increment_tuples(
        m, n,
        [&](const std::vector<GroupElement>& xs, double prob) {
            GroupElement z = b.identity();
            std::size_t idle = 0;
            double active_prob = 1.0;
            for (const auto& x : xs) {
                z = b.multiply(z, x);
                if (x.is_identity())
                    ++idle;
                else
                    active_prob *= stripped->pmf(x);
            }
            joint[idle][z] += prob;
            law_idle[idle] += prob;
            double factored = std::pow(q0, static_cast<double>(idle)) *
                              std::pow(1 - q0, static_cast<double>(n - idle)) * active_prob;
            independence_err = std::max(independence_err, std::abs(prob - factored));
        },
        budget);

    LazyDecompositionReport out;
    out.n = n;
    out.idle_probability = q0;
    out.independence_max_error = independence_err;

    double binom_coeff = 1; // C(n, k) built incrementally
    for (std::size_t k = 0; k <= n; ++k) {
        if (k > 0)
            binom_coeff = binom_coeff * static_cast<double>(n - k + 1) / static_cast<double>(k);
        double binom = binom_coeff * std::pow(q0, static_cast<double>(k)) *
                       std::pow(1 - q0, static_cast<double>(n - k));
        out.binomial_max_error = std::max(out.binomial_max_error, std::abs(law_idle[k] - binom));

        if (law_idle[k] <= 0)
            continue;
        const ExactDistribution& oracle = tilde_laws[n - k];
        double tv = 0;
        for (const auto& [z, p] : joint[k])
            tv += std::abs(p / law_idle[k] - oracle.prob(z));
        for (const auto& [z, p] : oracle.atoms)
            if (!joint[k].count(z))
                tv += p;
        out.max_tv = std::max(out.max_tv, 0.5 * tv);
    }
    return out;
}

double exact_endpoint_mean(const Cocycle& c, const DrivingMeasure& m, int n,
                           std::size_t support_cap) {
    if (c.kind() == Cocycle::Kind::AdditiveSum)
        throw std::invalid_argument("exact mean: end-point cocycles only");
    ExactDistribution law = convolution_power(m.backend(), m, n, support_cap);
    double acc = 0;
    for (const auto& [z, p] : law.atoms)
        acc += p * c.eval_position(z);
    return acc;
}

} // namespace clab
