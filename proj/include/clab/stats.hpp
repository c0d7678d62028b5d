#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace clab {

/// Fixed-shape pairwise summation: the reduction tree depends only on the
/// length, so results are reproducible no matter how the values were
/// produced or scheduled.
double pairwise_sum(std::span<const double> xs);

double mean(std::span<const double> xs);

struct MeanSe {
    double value = 0;
    double se = 0;
    std::size_t count = 0;
};

/// Sample mean with its standard error (sd / sqrt(n)).
MeanSe mean_se(std::span<const double> xs);

/// Unbiased sample variance (two-pass).
double sample_variance(std::span<const double> xs);

/// Standard error of the sample variance via the fourth central moment:
/// Var(S^2) ~= (m4 - (n-3)/(n-1) s^4) / n.
double sample_variance_se(std::span<const double> xs);

/// Central moment E[(x - mean)^p].
double central_moment(std::span<const double> xs, double p);

double skewness(std::span<const double> xs);
double excess_kurtosis(std::span<const double> xs);

double normal_cdf(double x);

/// CDF of |N(0,1)|.
double half_normal_cdf(double x);

/// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of the
/// samples and a reference CDF. Sorts a copy of the input.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// Regularized upper incomplete gamma Q(a, x); Q(k/2, x/2) is the chi-square
/// survival function.
double gamma_q(double a, double x);

/// p-value of Pearson's chi-square statistic with the given degrees of freedom.
double chi_square_pvalue(double statistic, int dof);

struct LinearFit {
    double slope = 0;
    double intercept = 0;
    double r2 = 0;
    double slope_se = 0;
    std::size_t points = 0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

/// Weighted least squares with per-point weights (typically 1/se^2).
LinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> w);

/// One-sided Mann-Kendall trend test for an increasing trend. Returns the
/// exact permutation p-value P[S >= s_observed] under the null for up to 10
/// points (all orderings enumerated), the normal approximation beyond.
double mann_kendall_pvalue_increasing(std::span<const double> xs);

} // namespace clab
