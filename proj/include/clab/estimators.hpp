#pragma once

#include "clab/measures.hpp"
#include "clab/parallel.hpp"
#include "clab/stats.hpp"
#include "clab/walk.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clab {

struct EstimateReport {
    double value = 0;
    double se = 0;
    std::size_t samples = 0;
    std::vector<std::size_t> n_grid;
    double confidence = 0.99;
    std::string method;
    /// Mean-based speed bracket [(E Q_n - tau1)/n, (E Q_n + tau1)/n]; present
    /// when a first-moment defect constant was supplied.
    std::optional<std::pair<double, double>> speed_bracket;
};

/// Empirical defect and first-step moment constants over an (n, m) grid:
/// tau_p = sup over the grid of E|Psi_{n,m}|^p (a lower estimate of the true
/// sup, used one-sidedly inside upper-bound checks) and chi_p = E|Q_1|^p
/// (exact for finite-support measures).
struct DeviationConstants {
    std::vector<std::pair<std::size_t, std::size_t>> grid;
    std::map<double, double> tau;
    std::map<double, double> chi;
    std::size_t samples_per_cell = 0;

    double tau_at(double p) const { return tau.at(p); }
    double chi_at(double p) const { return chi.at(p); }
};

DeviationConstants estimate_deviation_constants(
    const Cocycle& c, const DrivingMeasure& m,
    std::vector<std::pair<std::size_t, std::size_t>> grid, std::vector<double> moments,
    std::size_t samples, std::uint64_t seed, const Parallel& par);

/// Mean of Q_n / n with standard error over fresh trajectories.
EstimateReport estimate_speed(const Cocycle& c, const DrivingMeasure& m, std::size_t n,
                              std::size_t samples, std::uint64_t seed, const Parallel& par,
                              std::optional<double> tau1 = std::nullopt);

struct VariancePoint {
    std::size_t n = 0;
    double var_over_n = 0;
    double se = 0; // standard error of var_over_n
    double bound = 0;
    bool within_bound = true;
};

/// Var[Q_n]/n over the grid (fresh trajectories per n), flagged against the
/// linear bound 4 chi_2 + 16 tau_2 with 5 SE of slack.
std::vector<VariancePoint> estimate_variance_curve(const Cocycle& c, const DrivingMeasure& m,
                                                   const std::vector<std::size_t>& n_grid,
                                                   std::size_t samples, std::uint64_t seed,
                                                   const Parallel& par, double chi2,
                                                   double tau2);

struct TailFit {
    std::vector<double> thresholds;
    std::vector<double> survival; // worst case over the (n, m) grid
    double log_prefactor = 0;     // log A in A exp(-B c)
    double rate = 0;              // B > 0 claims exponential decay
    double fit_rms = 0;
    std::size_t usable_bins = 0;
    bool degenerate = false;           // fewer than 4 nonzero bins
    std::vector<double> cell_rates;    // per-cell fitted B
    double rate_spread = 0;            // max_i |B_i / mean(B) - 1|
};

/// Empirical survival of |Psi_{n,m}| over a threshold grid: worst case over
/// the (n, m) grid with a log-linear least-squares fit (zero-count bins are
/// excluded; fewer than 4 usable bins marks the fit degenerate).
TailFit deviation_tail(const Cocycle& c, const DrivingMeasure& m,
                       const std::vector<std::pair<std::size_t, std::size_t>>& grid,
                       const std::vector<double>& thresholds, std::size_t samples,
                       std::uint64_t seed, const Parallel& par);

struct HigherMomentPoint {
    std::size_t n = 0;
    double ratio = 0; // E|Q_n - mean|^p / n^{p/2}
};

struct HigherMomentReport {
    double p = 0;
    std::vector<HigherMomentPoint> points;
    double trend_pvalue = 1; // Mann-Kendall, increasing alternative
    bool bounded = true;     // no growth trend at the 1% level
};

HigherMomentReport higher_moment_ratio(const Cocycle& c, const DrivingMeasure& m, double p,
                                       const std::vector<std::size_t>& n_grid,
                                       std::size_t samples, std::uint64_t seed,
                                       const Parallel& par);

struct EfronSteinReport {
    std::size_t n = 0;
    double lhs = 0; // Var[Q_n]
    double lhs_se = 0;
    double rhs = 0; // (1/2) sum_k E[(Q_n^{(k)} - Q_n)^2]
    double rhs_se = 0;
    std::vector<double> influence; // per-k mean squared difference
    std::vector<double> influence_se;
    double influence_bound = 0; // 8 chi_2 + 32 tau_2
    bool inequality_holds = true;
    bool influences_bounded = true;
};

EfronSteinReport efron_stein_check(const Cocycle& c, const DrivingMeasure& m, std::size_t n,
                                   std::size_t samples, std::uint64_t seed,
                                   const Parallel& par, double chi2, double tau2);

struct CltPoint {
    std::size_t n = 0;
    double ks_vs_fitted_normal = 0;
    double sigma2 = 0; // Var[Q_n] / n
    double sigma2_se = 0;
    double skewness = 0;
    double excess_kurtosis = 0;
};

struct CltReport {
    std::vector<CltPoint> points;
    bool ks_decreasing = false;
    bool degenerate_variance = false; // sigma^2 below 1e-6 at the largest n
    std::size_t samples = 0;
    /// Q_n / sqrt(n) at the largest grid point, for external oracle
    /// comparisons (e.g. the folded-normal negative control).
    std::vector<double> final_scaled;
    /// QQ probe at the largest n: (normal quantile, sample quantile) pairs.
    std::vector<std::pair<double, double>> qq;
};

/// Normalized fluctuations (Q_n - mean)/sqrt(n) against a fitted centered
/// Gaussian: per-n KS distance, moments, QQ data. Centering uses the sample
/// mean; trajectories are shared across the grid (common random numbers).
CltReport clt_suite(const Cocycle& c, const DrivingMeasure& m,
                    const std::vector<std::size_t>& n_grid, std::size_t samples,
                    std::uint64_t seed, const Parallel& par);

struct LinearProgressPoint {
    std::size_t n = 0;
    double survival = 0; // P[d(id, Z_n) <= n / C]
};

struct LinearProgressReport {
    double progress_constant = 0;
    std::vector<LinearProgressPoint> points;
    bool fit_valid = false;
    LinearFit log_fit; // log survival against n, over nonzero cells
    bool decays = false;      // negative slope with R^2 >= 0.9
    double final_survival = 0;
};

LinearProgressReport linear_progress_tail(const DrivingMeasure& m, double progress_constant,
                                          const std::vector<std::size_t>& n_grid,
                                          std::size_t samples, std::uint64_t seed,
                                          const Parallel& par);

struct LazyDecompositionReport {
    std::size_t n = 0;
    double idle_probability = 0;   // mu(id)
    double max_tv = 0;             // max_k TV(Law(Z_n | N_n=k), Law(Z~_{n-k}))
    double binomial_max_error = 0; // Law(N_n) against Binomial(n, mu(id))
    double independence_max_error = 0;
};

/// Exact enumeration check of the idle/active decomposition of a lazy walk:
/// conditioned on k idle steps the endpoint follows the stripped walk after
/// n - k steps, the idle count is Binomial(n, mu(id)), and the idle pattern
/// is independent of the active increments. Raises BudgetError when the
/// enumeration would exceed the budget.
LazyDecompositionReport lazy_decomposition_check(const DrivingMeasure& m, std::size_t n,
                                                 std::size_t budget = 10000000);

/// Exact E[Q_n] for end-point cocycles via convolution powers.
double exact_endpoint_mean(const Cocycle& c, const DrivingMeasure& m, int n,
                           std::size_t support_cap = 500000);

} // namespace clab
