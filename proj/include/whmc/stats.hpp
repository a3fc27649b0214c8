#pragma once

#include <cstdint>
#include <vector>

namespace whmc::stats {

// Welford accumulator with Chan's pairwise merge. Merging chunk results in a
// fixed order makes the reduction independent of how work was scheduled.
class RunningStats {
  public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void merge(const RunningStats& o) {
        if (o.n_ == 0) return;
        if (n_ == 0) {
            *this = o;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(o.n_);
        const double d = o.mean_ - mean_;
        const double nt = na + nb;
        mean_ += d * nb / nt;
        m2_ += o.m2_ + d * d * na * nb / nt;
        n_ += o.n_;
    }

    std::int64_t count() const { return n_; }
    double mean() const { return mean_; }
    // Unbiased sample variance.
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double std_error() const;

  private:
    std::int64_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

double normal_cdf(double x);

// z-score of an observed sample mean against an exact expected value.
double z_score(double sample_mean, double sample_std_error, double expected);

// One-sample Kolmogorov-Smirnov statistic; `cdf_values` are F(x_i) for the
// samples and get sorted in place.
double ks_statistic(std::vector<double>& cdf_values);

// Asymptotic Kolmogorov tail probability Q(lambda) = P(sqrt(n) D > lambda).
double kolmogorov_q(double lambda);

// p-value of the KS statistic at sample size n.
double ks_p_value(double d, std::int64_t n);

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

// Least squares on already-transformed coordinates.
FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Sum in fixed pairwise order (used where bit-reproducible totals matter).
double pairwise_sum(const std::vector<double>& v);

} // namespace whmc::stats
