#pragma once

#include <complex>
#include <vector>

#include "whmc/models.hpp"
#include "whmc/rng.hpp"

// Wiener-Hopf factor samplers. At an exponential time e(q) the pair
// (sup, inf) of the killed process splits into independent factors:
// Brownian factors are single exponentials with rates from the quadratic
// psi(w) = q; beta-class factors are finite mixtures of exponentials built
// from the zeros of psi(w) = q interlacing the poles of psi.

namespace whmc::factors {

struct BmFactorRates {
    double sup_rate = 0.0; // sup ~ Exp(sup_rate)
    double inf_rate = 0.0; // -inf ~ Exp(inf_rate)
};

BmFactorRates bm_factor_rates(const models::BrownianMotion& bm, double q);

struct ZeroSet {
    double q = 0.0;
    int truncation = 0;            // paired pole/zero terms per side
    std::vector<double> zeros_pos; // ascending, > 0
    std::vector<double> zeros_neg; // descending, < 0
};

struct FindZeroOptions {
    // Tight enough that quadrature noise in psi stays below residual_rel * q
    // even at q ~ 10; the integrand pieces are O(1).
    models::EvalOptions eval{1e-13, 1e-12};
    // |psi(zero)-q| <= residual_rel * q, plus the representation allowance
    // 2 ulp(zero) |psi'(zero)| when the zero crowds a pole (the nearest
    // representable double then cannot do better).
    double residual_rel = 1e-10;
};

ZeroSet find_zeros(const models::BetaParams& p, double q, int truncation,
                   const FindZeroOptions& opts = {});

enum class Side { sup, inf };

// Mixture density sum_k w_k r_k e^{-r_k x} on x >= 0 describing |factor|;
// the inf-side factor itself is the negated variable. Weights come from
// partial fractions of the interlacing zero/pole product and may in
// principle carry signs; sampling then runs envelope rejection against the
// |w| mixture.
struct ExponentialMixture {
    Side side = Side::sup;
    std::vector<double> rates;   // ascending
    std::vector<double> weights; // sum to 1
    std::vector<double> cum_abs; // cumulative |w| for inverse-transform draws
    double total_abs = 1.0;
    bool all_nonnegative = true;

    double mean_abs() const;                  // E|factor| = sum w_k / r_k
    double density_abs(double x) const;       // density of |factor|
    double envelope_abs(double x) const;      // sum |w_k| r_k e^{-r_k x}
    double cdf_abs(double x) const;           // CDF of |factor|
    std::complex<double> cf(double z) const;  // CF of the signed factor
};

ExponentialMixture build_mixture(const models::BetaParams& p, const ZeroSet& zs, Side side);

// Magnitude draw; the caller applies the side's sign.
double sample_factor(const ExponentialMixture& mix, rng::UniformStream& stream);

struct FactorOptions {
    // Terms per side; treated as a floor. The sampler raises it with q so
    // the pole ladder reaches past the factor's natural scale (about
    // 7 sqrt(q) rates for pure-jump models, sigma sqrt(2q) with a Gaussian
    // part), which keeps the mixture variance error near 1e-2 or below.
    int truncation = 50;
    bool convergence_check = true; // compare mixture means at N and 2N
    // The truncated product converges like 1/N: the mean picks up an
    // unpaired boundary term of size ~1/p_N, about 1e-2 at N = 50 for unit
    // ladder spacing. The default tolerance flags a broken ladder rather
    // than certifying digits; tighten it only together with truncation.
    double convergence_tol = 2e-2;
    FindZeroOptions zeros{};
};

// Precomputed sampler for one (model, q); per-draw cost is O(log terms).
class FactorSampler {
  public:
    FactorSampler(const models::LevyModel& m, double q, const FactorOptions& opts = {});

    double sample_sup(rng::UniformStream& s) const { return sample_factor(sup_, s); }
    double sample_inf(rng::UniformStream& s) const { return -sample_factor(inf_, s); }

    double q() const { return q_; }
    const ExponentialMixture& sup_mixture() const { return sup_; }
    const ExponentialMixture& inf_mixture() const { return inf_; }
    // |mean_N - mean_2N| per side, filled when the convergence check ran;
    // zero when the check was off or the truncation was auto-raised.
    double sup_mean_drift() const { return sup_drift_; }
    double inf_mean_drift() const { return inf_drift_; }

  private:
    double q_ = 0.0;
    ExponentialMixture sup_;
    ExponentialMixture inf_;
    double sup_drift_ = 0.0;
    double inf_drift_ = 0.0;
};

} // namespace whmc::factors
