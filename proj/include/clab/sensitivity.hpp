#pragma once

#include "clab/estimators.hpp"
#include "clab/measures.hpp"
#include "clab/parallel.hpp"
#include "clab/walk.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace clab {

using TrajectoryStatistic = std::function<double(const Trajectory&)>;
using TupleStatistic = std::function<double(const std::vector<GroupElement>&)>;

/// Exact E^mu[F(X_1..X_n)] by enumeration over all increment tuples.
double enumerate_expectation(const DrivingMeasure& m, std::size_t n,
                             const TupleStatistic& F, std::size_t budget = 10000000);

/// Exact E^{mu_t}[F(X_1..X_n)] as a polynomial in t: each tuple carries the
/// weight prod_j (mu_0(a_j) + t (mu_1 - mu_0)(a_j)), a degree-n polynomial.
/// Returns the n+1 coefficients (constant term first).
std::vector<double> exact_expectation_polynomial(const MeasureCurve& curve, std::size_t n,
                                                 const TupleStatistic& F,
                                                 std::size_t budget = 10000000);

double polynomial_value(const std::vector<double>& coefficients, double t);

struct GirsanovReport {
    double estimate = 0;
    double se = 0;
    double mean_weight = 0; // likelihood ratios average to 1
    double mean_weight_se = 0;
    double effective_sample_fraction = 1; // (sum w)^2 / (n sum w^2)
    bool high_variance = false;           // effective fraction below 10%
    std::size_t samples = 0;
};

/// Importance-sampling estimate of E^{m_target}[F] from m_base trajectories
/// weighted by the likelihood ratio prod_j m_target(X_j)/m_base(X_j).
/// Requires identical supports.
GirsanovReport girsanov_estimate(const TrajectoryStatistic& F, const DrivingMeasure& m_base,
                                 const DrivingMeasure& m_target, std::size_t n,
                                 std::size_t samples, std::uint64_t seed,
                                 const Parallel& par);

struct SpeedDerivativeReport {
    std::vector<std::size_t> n_grid;
    std::vector<double> covariance_by_n; // (1/n) Cov(Q_n, M_n)
    double covariance = 0;               // value at the largest n
    double covariance_se = 0;
    double covariance_stability = 0; // gap to the previous grid point
    double finite_difference = 0;    // Richardson-combined two-step estimate
    double finite_difference_se = 0;
    double step1 = 0.05, step2 = 0.025;
    bool agree = false;
    bool sign_consistent = true;
    std::size_t samples = 0;
};

/// Derivative of the rate of escape along a measure curve, twice:
/// as the covariance limit (1/n) Cov(Q_n, sum_j nu(X_j)) and as a coupled
/// Richardson finite difference of the speed; reports their agreement.
/// Both routes share trajectories through inverse-CDF coupling.
SpeedDerivativeReport speed_derivative(const MeasureCurve& curve, const Cocycle& c,
                                       const std::vector<std::size_t>& n_grid,
                                       std::size_t samples, std::uint64_t seed,
                                       const Parallel& par, double step1 = 0.05,
                                       double step2 = 0.025);

struct LipschitzReport {
    double speed0 = 0, speed0_se = 0;
    double speed1 = 0, speed1_se = 0;
    double delta = 0; // |mean Q_n^1 - mean Q_n^0| / n from coupled samples
    double delta_se = 0;
    double nu = 0;
    double ratio = 0;    // delta / nu
    double constant = 0; // 2 (1 + sup_t nu(mu_t, mu_0)) chi_1 + 4 max_t tau_1(mu_t)
    double chi1 = 0;
    double tau1_max = 0;
    bool within = true; // delta <= constant * nu + 3 delta_se
};

/// Audits |speed(mu_1) - speed(mu_0)| <= C nu(mu_0, mu_1) with the explicit
/// constant assembled from chi_1 and grid-estimated tau_1 along the segment.
LipschitzReport lipschitz_audit(const MeasurePtr& m0, const MeasurePtr& m1,
                                const Cocycle& c, std::size_t n, std::size_t samples,
                                std::uint64_t seed, const Parallel& par,
                                const std::vector<std::pair<std::size_t, std::size_t>>&
                                    tau_grid = {{16, 16}, {32, 64}, {64, 64}},
                                std::size_t tau_samples = 2000,
                                const std::vector<double>& t_probe = {0.0, 0.25, 0.5,
                                                                      0.75, 1.0});

struct GreenFluctuationPoint {
    GroupElement target;
    double d0 = 0, d0_se = 0;
    double d1 = 0, d1_se = 0;
    double normalized_gap = 0;      // |d1 - d0| / (nu |z|)
    double conditional_hits0 = 0;   // E[T_z | T_z finite] / |z| under mu_0
    double conditional_hits1 = 0;
};

struct GreenFluctuationReport {
    double nu = 0;
    std::vector<GreenFluctuationPoint> points;
    double max_normalized_gap = 0;
    double max_conditional_hitting_ratio = 0;
};

/// Empirical audit of the Green-metric fluctuation bound
/// |d_G^{mu_1} - d_G^{mu_0}|(id, z) <= k nu(mu_0, mu_1) d(id, z) on short
/// targets, plus conditional mean hitting times E[T_z | T_z < inf] / |z|.
GreenFluctuationReport green_fluctuation_audit(const MeasurePtr& m0, const MeasurePtr& m1,
                                               int radius, std::size_t horizon,
                                               std::size_t trials, std::uint64_t seed,
                                               const Parallel& par);

} // namespace clab
