#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "whmc/stats.hpp"

// Shared test utilities. The Simpson integrator is deliberately independent
// of src/quadrature so oracle cross-checks do not reuse the code under test.

namespace testutil {

inline double simpson_panel(const std::function<double(double)>& f, double a, double b) {
    const double m = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
}

inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol, int depth = 40) {
    const double whole = simpson_panel(f, a, b);
    const double m = 0.5 * (a + b);
    const double left = simpson_panel(f, a, m);
    const double right = simpson_panel(f, m, b);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson(f, a, m, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, m, b, 0.5 * tol, depth - 1);
}

// Two-sample Kolmogorov-Smirnov p-value (asymptotic).
inline double ks_two_sample_p(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        const double fa = static_cast<double>(i) / na;
        const double fb = static_cast<double>(j) / nb;
        d = std::max(d, std::fabs(fa - fb));
    }
    const double ne = na * nb / (na + nb);
    return whmc::stats::kolmogorov_q(std::sqrt(ne) * d);
}

// One-sample KS p-value given the model CDF evaluated at each sample.
inline double ks_p_from_cdf(std::vector<double> cdf_values) {
    const auto n = static_cast<std::int64_t>(cdf_values.size());
    const double d = whmc::stats::ks_statistic(cdf_values);
    return whmc::stats::ks_p_value(d, n);
}

inline double sample_corr(const std::vector<double>& x, const std::vector<double>& y) {
    whmc::stats::RunningStats sx, sy;
    for (double v : x) sx.add(v);
    for (double v : y) sy.add(v);
    double cov = 0.0;
    for (size_t i = 0; i < x.size(); ++i) cov += (x[i] - sx.mean()) * (y[i] - sy.mean());
    cov /= static_cast<double>(x.size() - 1);
    return cov / std::sqrt(sx.variance() * sy.variance());
}

} // namespace testutil
