#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "whmc/errors.hpp"

// Process definitions. The characteristic exponent convention throughout is
// E[e^{i z X_t}] = e^{-t Psi(z)}, so the real log-MGF is
// psi(w) = log E[e^{w X_1}] = -Psi(-iw). Factor root-finding works on psi,
// whose meromorphic continuation across its real poles is evaluated here.

namespace whmc::models {

struct BrownianMotion {
    double mu = 0.0;
    double sigma = 1.0;
};

// Jump density c1 e^{-a1 b1 x}(1-e^{-b1 x})^{-lambda1} on x>0 and
// c2 e^{a2 b2 x}(1-e^{b2 x})^{-lambda2} on x<0, plus Gaussian sigma and
// linear coefficient a of Psi (so E[X_1] carries -a).
struct BetaParams {
    double a = 0.0;
    double sigma = 0.0;
    double c1 = 1.0, a1 = 1.0, b1 = 1.0, lambda1 = 1.5;
    double c2 = 1.0, a2 = 1.0, b2 = 1.0, lambda2 = 1.5;
};

enum class Variation { bounded, unbounded };

struct Moments {
    double mean1 = 0.0; // E[X_1]
    double var1 = 0.0;  // V[X_1]
};

struct EvalOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
};

class LevyModel {
  public:
    static LevyModel brownian(double mu, double sigma);
    static LevyModel beta(const BetaParams& p);

    bool is_brownian() const { return bm_.has_value(); }
    const BrownianMotion& bm() const;
    const BetaParams& beta_params() const;

  private:
    LevyModel() = default;
    std::optional<BrownianMotion> bm_;
    std::optional<BetaParams> beta_;
};

// Lévy density at x != 0.
double beta_levy_density(const BetaParams& p, double x);

// Psi(z) for real z.
std::complex<double> char_exponent(const LevyModel& m, double z, const EvalOptions& opts = {});

// psi(w) = log E[e^{w X_1}] continued across the real poles of the jump
// transform. Throws numeric_error if w sits on a pole.
double log_mgf(const LevyModel& m, double w, const EvalOptions& opts = {});

// psi evaluated with the two ladder terms bracketing one pole gap split off
// analytically:
//   psi(w)          = regular + num_lo/(mu_lo - w) + num_hi/(mu_hi - w)
//   psi(-w), mirror = same decomposition of the ladder on the other side.
// k_lo is the index of the pole below the gap (-1 for the gap between 0 and
// the first pole, which leaves num_lo = 0). Root finding against q uses this
// form so the cancellation between the pole terms and `regular` happens in
// exact arithmetic instead of inside the series sum.
struct GapSplit {
    double regular = 0.0;
    double mu_lo = 0.0, num_lo = 0.0;
    double mu_hi = 0.0, num_hi = 0.0;
};

GapSplit log_mgf_gap(const LevyModel& m, double w, bool mirror, int k_lo,
                     const EvalOptions& opts = {});

inline double gap_value(const GapSplit& s, double w) {
    double v = s.regular;
    if (s.num_lo != 0.0) v += s.num_lo / (s.mu_lo - w);
    v += s.num_hi / (s.mu_hi - w);
    return v;
}

Moments moments(const LevyModel& m, const EvalOptions& opts = {});

Variation variation(const LevyModel& m);

// Blumenthal-Getoor index max(lambda_i) - 1 clamped to [0, 2).
double bg_index(const BetaParams& p);

// Poles of psi: b1(a1+k) on the positive axis (from positive jumps) and
// -b2(a2+k) on the negative axis, k = 0..count-1. Empty when c_i = 0.
std::vector<double> psi_poles_positive(const BetaParams& p, int count);
std::vector<double> psi_poles_negative(const BetaParams& p, int count);

} // namespace whmc::models
