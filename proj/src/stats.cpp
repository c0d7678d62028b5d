#include "clab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace clab {

double pairwise_sum(std::span<const double> xs) {
    if (xs.empty())
        return 0.0;
    if (xs.size() <= 8) {
        double acc = 0;
        for (double x : xs)
            acc += x;
        return acc;
    }
    std::size_t half = xs.size() / 2;
    return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

double mean(std::span<const double> xs) {
    if (xs.empty())
        return 0.0;
    return pairwise_sum(xs) / static_cast<double>(xs.size());
}

MeanSe mean_se(std::span<const double> xs) {
    MeanSe out;
    out.count = xs.size();
    if (xs.empty())
        return out;
    out.value = mean(xs);
    if (xs.size() < 2)
        return out;
    out.se = std::sqrt(sample_variance(xs) / static_cast<double>(xs.size()));
    return out;
}

double sample_variance(std::span<const double> xs) {
    if (xs.size() < 2)
        return 0.0;
    double m = mean(xs);
    std::vector<double> sq(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double d = xs[i] - m;
        sq[i] = d * d;
    }
    return pairwise_sum(sq) / static_cast<double>(xs.size() - 1);
}

double sample_variance_se(std::span<const double> xs) {
    std::size_t n = xs.size();
    if (n < 4)
        return 0.0;
    double s2 = sample_variance(xs);
    double m4 = central_moment(xs, 4.0);
    double nn = static_cast<double>(n);
    double var_s2 = (m4 - (nn - 3) / (nn - 1) * s2 * s2) / nn;
    return var_s2 > 0 ? std::sqrt(var_s2) : 0.0;
}

double central_moment(std::span<const double> xs, double p) {
    if (xs.empty())
        return 0.0;
    double m = mean(xs);
    std::vector<double> pow_(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i)
        pow_[i] = std::pow(std::abs(xs[i] - m), p);
    return pairwise_sum(pow_) / static_cast<double>(xs.size());
}

double skewness(std::span<const double> xs) {
    double m = mean(xs);
    std::vector<double> c3(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double d = xs[i] - m;
        c3[i] = d * d * d;
    }
    double mu3 = pairwise_sum(c3) / static_cast<double>(xs.size());
    double s2 = central_moment(xs, 2.0);
    return s2 > 0 ? mu3 / std::pow(s2, 1.5) : 0.0;
}

double excess_kurtosis(std::span<const double> xs) {
    double mu4 = central_moment(xs, 4.0);
    double s2 = central_moment(xs, 2.0);
    return s2 > 0 ? mu4 / (s2 * s2) - 3.0 : 0.0;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * 0.7071067811865475244); }

double half_normal_cdf(double x) {
    if (x <= 0)
        return 0.0;
    return 2 * normal_cdf(x) - 1;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty())
        return 0.0;
    std::sort(samples.begin(), samples.end());
    double n = static_cast<double>(samples.size());
    double d = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        double f = cdf(samples[i]);
        double lo = f - static_cast<double>(i) / n;
        double hi = static_cast<double>(i + 1) / n - f;
        d = std::max(d, std::max(lo, hi));
    }
    return d;
}

namespace {

// Lower regularized incomplete gamma by series, upper by continued fraction
// (standard split at x < a + 1).
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15)
            break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1 - a;
    double c = 1 / tiny;
    double d = 1 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1) < 1e-15)
            break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace

double gamma_q(double a, double x) {
    if (x < 0 || a <= 0)
        throw std::invalid_argument("gamma_q: need x >= 0 and a > 0");
    if (x == 0)
        return 1.0;
    if (x < a + 1)
        return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double chi_square_pvalue(double statistic, int dof) {
    if (dof <= 0)
        throw std::invalid_argument("chi_square_pvalue: dof must be positive");
    return gamma_q(0.5 * dof, 0.5 * statistic);
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    std::vector<double> w(x.size(), 1.0);
    return weighted_least_squares(x, y, w);
}

LinearFit weighted_least_squares(std::span<const double> x, std::span<const double> y,
                                 std::span<const double> w) {
    if (x.size() != y.size() || x.size() != w.size() || x.size() < 2)
        throw std::invalid_argument("least squares: need matching x/y/w with >= 2 points");
    LinearFit fit;
    fit.points = x.size();
    double sw = 0, swx = 0, swy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        swx += w[i] * x[i];
        swy += w[i] * y[i];
    }
    double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double dx = x[i] - xbar, dy = y[i] - ybar;
        sxx += w[i] * dx * dx;
        sxy += w[i] * dx * dy;
        syy += w[i] * dy * dy;
    }
    if (sxx <= 0)
        throw std::invalid_argument("least squares: x values are constant");
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    if (x.size() > 2) {
        double ss_res = 0, sw_eff = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            double r = y[i] - fit.intercept - fit.slope * x[i];
            ss_res += w[i] * r * r;
            sw_eff += w[i];
        }
        double dof = static_cast<double>(x.size() - 2);
        double scale = ss_res / dof * (static_cast<double>(x.size()) / sw_eff);
        fit.slope_se = std::sqrt(std::max(scale, 0.0) / sxx * sw_eff /
                                 static_cast<double>(x.size()));
    }
    return fit;
}

namespace {

int mk_statistic(std::span<const int> ranks) {
    int s = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i)
        for (std::size_t j = i + 1; j < ranks.size(); ++j)
            s += (ranks[j] > ranks[i]) - (ranks[j] < ranks[i]);
    return s;
}

} // namespace

double mann_kendall_pvalue_increasing(std::span<const double> xs) {
    std::size_t n = xs.size();
    if (n < 3)
        return 1.0;
    int s_obs = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            s_obs += (xs[j] > xs[i]) - (xs[j] < xs[i]);

    if (n <= 10) {
        // Exact permutation null: every ordering is equally likely.
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        long total = 0, at_least = 0;
        do {
            ++total;
            if (mk_statistic(perm) >= s_obs)
                ++at_least;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return static_cast<double>(at_least) / static_cast<double>(total);
    }

    double nn = static_cast<double>(n);
    double var = nn * (nn - 1) * (2 * nn + 5) / 18.0;
    double z = (s_obs > 0 ? s_obs - 1.0 : s_obs + 1.0) / std::sqrt(var);
    return 1.0 - normal_cdf(z);
}

} // namespace clab
