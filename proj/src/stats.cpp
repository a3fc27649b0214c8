#include "whmc/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace whmc::stats {

double RunningStats::std_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double z_score(double sample_mean, double sample_std_error, double expected) {
    if (sample_std_error <= 0.0) return sample_mean == expected ? 0.0 : INFINITY;
    return (sample_mean - expected) / sample_std_error;
}

double ks_statistic(std::vector<double>& cdf_values) {
    if (cdf_values.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::sort(cdf_values.begin(), cdf_values.end());
    const double n = static_cast<double>(cdf_values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < cdf_values.size(); ++i) {
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max(d, std::max(cdf_values[i] - lo, hi - cdf_values[i]));
    }
    return d;
}

double kolmogorov_q(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double q = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * ((k % 2 == 1) ? 1.0 : -1.0) *
                            std::exp(-2.0 * static_cast<double>(k) * k * lambda * lambda);
        q += term;
        if (std::fabs(term) < 1e-16) break;
    }
    return std::min(1.0, std::max(0.0, q));
}

double ks_p_value(double d, std::int64_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    // Small-sample continuity correction from Stephens.
    return kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
}

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("linear_fit: need matching samples, at least two points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: degenerate abscissae");
    FitResult r;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    r.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return r;
}

double pairwise_sum(const std::vector<double>& v) {
    // Bottom-up pairwise reduction; order depends only on the vector layout.
    if (v.empty()) return 0.0;
    std::vector<double> acc(v);
    std::size_t n = acc.size();
    while (n > 1) {
        std::size_t half = n / 2;
        for (std::size_t i = 0; i < half; ++i) acc[i] = acc[2 * i] + acc[2 * i + 1];
        if (n % 2 == 1) {
            acc[half] = acc[n - 1];
            ++half;
        }
        n = half;
    }
    return acc[0];
}

} // namespace whmc::stats
