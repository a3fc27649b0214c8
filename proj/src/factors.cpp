#include "whmc/factors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>

#include "whmc/errors.hpp"
#include "whmc/rootfind.hpp"

namespace whmc::factors {

namespace {

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c);
    return std::string(buf);
}

} // namespace

BmFactorRates bm_factor_rates(const models::BrownianMotion& bm, double q) {
    if (q <= 0.0) throw config_error("bm_factor_rates: q must be positive");
    if (bm.sigma <= 0.0)
        throw config_error("bm_factor_rates: sigma must be positive (no diffusion part)");
    const double s2 = bm.sigma * bm.sigma;
    const double disc = std::sqrt(bm.mu * bm.mu + 2.0 * s2 * q);
    BmFactorRates r;
    r.sup_rate = (disc - bm.mu) / s2;
    r.inf_rate = (disc + bm.mu) / s2;
    return r;
}

namespace {

// One zero of psi(w) = q (or psi(-w) = q when mirrored) per gap of the
// ascending pole ladder, plus one in (0, poles[0]). The zeros crowd the
// poles hard (within ~1e-4 of a pole once the Gaussian part or q dominates),
// which costs direct evaluation of psi most of its digits to the pole term.
// Work instead with the split form
//   f(w) = (regular - q) + num_lo/(mu_lo - w) + num_hi/(mu_hi - w)
// and root-find on the pole-cleared
//   g(w) = f(w) (mu_lo - w)(mu_hi - w),
// which is smooth across the whole gap, evaluable at the poles themselves
// (g(mu_lo) = num_lo (mu_hi - mu_lo) > 0, g(mu_hi) = num_hi (mu_lo - mu_hi)
// < 0), and has exactly one interior root, so Brent needs no margin search.
// Brent stops within a couple of ulps of the root; a scan of the adjacent
// doubles then picks the representable w with the smallest |f|. That floor
// is fundamental: moving one ulp changes f by fp * ulp(z) with
// fp = num_lo/(mu_lo-z)^2 + num_hi/(mu_hi-z)^2, which can exceed
// residual_rel * q when the zero snuggles a pole, so the acceptance bound
// adds the representation allowance 2 fp ulp(z) to the requested tolerance.
std::vector<double> solve_gap_zeros(const models::LevyModel& m, bool mirror, double q,
                                    const std::vector<double>& poles, int count,
                                    const FindZeroOptions& opts) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    std::vector<double> zeros;
    zeros.reserve(count);

    for (int k = 0; k < count; ++k) {
        const double mu_l = (k == 0) ? 0.0 : poles[k - 1];
        const double mu_h = poles[k];

        auto split_f = [&](double w, double& fp_pole) {
            const auto s = models::log_mgf_gap(m, w, mirror, k - 1, opts.eval);
            const double dl = s.mu_lo - w, dh = s.mu_hi - w;
            fp_pole = (s.num_lo != 0.0 ? s.num_lo / (dl * dl) : 0.0) + s.num_hi / (dh * dh);
            double f = s.regular - q + s.num_hi / dh;
            if (s.num_lo != 0.0) f += s.num_lo / dl;
            return f;
        };
        auto g = [&](double w) {
            const auto s = models::log_mgf_gap(m, w, mirror, k - 1, opts.eval);
            if (k == 0) return (s.regular - q) * (s.mu_hi - w) + s.num_hi;
            return (s.regular - q) * (s.mu_lo - w) * (s.mu_hi - w) + s.num_lo * (s.mu_hi - w) +
                   s.num_hi * (s.mu_lo - w);
        };

        // psi(0) = 0 exactly, so the first gap's left endpoint needs no
        // evaluation: g(0) = (psi(0) - q) mu_h = -q mu_h.
        const double ga = (k == 0) ? -q * mu_h : g(mu_l);
        const double gb = g(mu_h);
        if (!(ga * gb < 0.0))
            throw numeric_error(fmt("solve_gap_zeros: no sign change across gap (%.6g, %.6g)",
                                    mu_l, mu_h));
        const double z0 = rootfind::brent(g, mu_l, mu_h, ga, gb, 2.0 * eps * mu_h);

        double best_w = 0.0, best_absf = std::numeric_limits<double>::infinity(), best_fp = 0.0;
        for (int i = -2; i <= 2; ++i) {
            double w = z0;
            for (int j = 0; j < std::abs(i); ++j)
                w = std::nextafter(w, i < 0 ? -std::numeric_limits<double>::infinity()
                                            : std::numeric_limits<double>::infinity());
            if (w <= mu_l || w >= mu_h) continue;
            double fp = 0.0;
            const double f = split_f(w, fp);
            if (std::fabs(f) < best_absf) {
                best_absf = std::fabs(f);
                best_w = w;
                best_fp = fp;
            }
        }

        const double ulp = std::nextafter(best_w, std::numeric_limits<double>::infinity()) - best_w;
        const double bound = opts.residual_rel * q + 2.0 * best_fp * ulp;
        if (best_absf > bound)
            throw numeric_error(fmt("solve_gap_zeros: residual %.3e exceeds %.3e at zero %.6g",
                                    best_absf, bound, best_w));
        zeros.push_back(best_w);
    }
    return zeros;
}

// Single zero on the positive axis when the side has no poles there (one-sided
// jump structure). Expands the bracket geometrically.
double solve_free_zero(const std::function<double(double)>& fn, double q, double residual_rel) {
    auto f = [&](double w) { return fn(w) - q; };
    double hi = 1.0, fhi = f(hi);
    int guard = 0;
    while (fhi <= 0.0) {
        hi *= 2.0;
        fhi = f(hi);
        if (++guard > 200)
            throw numeric_error(fmt(
                "solve_free_zero: psi(w)-q stays negative out to w=%.3e (degenerate factor)", hi));
    }
    double lo = hi * 0.5, flo = f(lo);
    while (flo >= 0.0) {
        lo *= 0.5;
        flo = f(lo);
        if (lo < 1e-300)
            throw numeric_error("solve_free_zero: no bracket near zero");
    }
    double z = rootfind::brent(f, lo, hi, flo, fhi, 1e-14 * std::max(1.0, hi));
    const double resid = std::fabs(f(z));
    if (resid > residual_rel * q)
        throw numeric_error(fmt("solve_free_zero: residual %.3e exceeds %.3e", resid,
                                residual_rel * q));
    return z;
}

} // namespace

ZeroSet find_zeros(const models::BetaParams& p, double q, int truncation,
                   const FindZeroOptions& opts) {
    if (q <= 0.0) throw config_error("find_zeros: q must be positive");
    if (truncation < 1) throw config_error("find_zeros: truncation must be >= 1");

    const models::LevyModel m = models::LevyModel::beta(p);
    ZeroSet zs;
    zs.q = q;
    zs.truncation = truncation;

    // Positive zeros live in the gaps of the positive poles b1(a1+k).
    if (p.c1 > 0.0) {
        std::vector<double> poles(truncation + 1);
        for (int k = 0; k <= truncation; ++k) poles[k] = p.b1 * (p.a1 + k);
        zs.zeros_pos = solve_gap_zeros(m, false, q, poles, truncation + 1, opts);
    } else {
        auto fn = [&](double w) { return models::log_mgf(m, w, opts.eval); };
        zs.zeros_pos = {solve_free_zero(fn, q, opts.residual_rel)};
    }

    // Negative zeros come from the mirrored function w -> psi(-w), whose
    // positive-axis poles are b2(a2+k).
    if (p.c2 > 0.0) {
        std::vector<double> poles(truncation + 1);
        for (int k = 0; k <= truncation; ++k) poles[k] = p.b2 * (p.a2 + k);
        std::vector<double> mirrored = solve_gap_zeros(m, true, q, poles, truncation + 1, opts);
        zs.zeros_neg.resize(mirrored.size());
        for (size_t i = 0; i < mirrored.size(); ++i) zs.zeros_neg[i] = -mirrored[i];
    } else {
        auto fn = [&](double w) { return models::log_mgf(m, -w, opts.eval); };
        zs.zeros_neg = {-solve_free_zero(fn, q, opts.residual_rel)};
    }
    return zs;
}

double ExponentialMixture::mean_abs() const {
    double s = 0.0;
    for (size_t k = 0; k < rates.size(); ++k) s += weights[k] / rates[k];
    return s;
}

double ExponentialMixture::density_abs(double x) const {
    double s = 0.0;
    for (size_t k = 0; k < rates.size(); ++k)
        s += weights[k] * rates[k] * std::exp(-rates[k] * x);
    return s;
}

double ExponentialMixture::envelope_abs(double x) const {
    double s = 0.0;
    for (size_t k = 0; k < rates.size(); ++k)
        s += std::fabs(weights[k]) * rates[k] * std::exp(-rates[k] * x);
    return s;
}

double ExponentialMixture::cdf_abs(double x) const {
    if (x <= 0.0) return 0.0;
    double s = 0.0;
    for (size_t k = 0; k < rates.size(); ++k)
        s += weights[k] * -std::expm1(-rates[k] * x);
    return s;
}

std::complex<double> ExponentialMixture::cf(double z) const {
    // sup side: E e^{izY}, Y >= 0; inf side: E e^{-izY} for the negated draw.
    const double zz = (side == Side::sup) ? z : -z;
    std::complex<double> s{0.0, 0.0};
    for (size_t k = 0; k < rates.size(); ++k)
        s += weights[k] / std::complex<double>(1.0, -zz / rates[k]);
    return s;
}

ExponentialMixture build_mixture(const models::BetaParams& p, const ZeroSet& zs, Side side) {
    ExponentialMixture mix;
    mix.side = side;

    std::vector<double> zeros;
    std::vector<double> poles;
    if (side == Side::sup) {
        zeros = zs.zeros_pos;
        if (p.c1 > 0.0 && zeros.size() >= 2)
            for (size_t k = 0; k + 1 < zeros.size(); ++k) poles.push_back(p.b1 * (p.a1 + k));
    } else {
        zeros.resize(zs.zeros_neg.size());
        for (size_t i = 0; i < zs.zeros_neg.size(); ++i) zeros[i] = -zs.zeros_neg[i];
        if (p.c2 > 0.0 && zeros.size() >= 2)
            for (size_t k = 0; k + 1 < zeros.size(); ++k) poles.push_back(p.b2 * (p.a2 + k));
    }
    const size_t n = zeros.size();
    if (n == 0) throw numeric_error("build_mixture: empty zero set");

    // Strict interlacing 0 < z_0 < p_0 < z_1 < ... < p_{n-2} < z_{n-1}.
    for (size_t k = 0; k < n; ++k) {
        if (!(zeros[k] > 0.0)) throw numeric_error("build_mixture: nonpositive zero");
        if (k + 1 < n) {
            if (!(zeros[k] < poles[k]) || !(poles[k] < zeros[k + 1]))
                throw numeric_error(fmt(
                    "build_mixture: interlacing violated near zero %.6g / pole %.6g", zeros[k],
                    k < poles.size() ? poles[k] : 0.0));
        }
    }

    // Partial-fraction residues of prod_j (1+u/p_j) / prod_j (1+u/z_j) at
    // u = -z_k, evaluated in log space to dodge overflow for large n.
    mix.rates = zeros;
    mix.weights.resize(n);
    for (size_t k = 0; k < n; ++k) {
        double log_mag = 0.0;
        int sign = 1;
        bool exact_zero = false;
        for (size_t j = 0; j < poles.size(); ++j) {
            const double term = 1.0 - zeros[k] / poles[j];
            if (term == 0.0) { exact_zero = true; break; }
            if (term < 0.0) sign = -sign;
            log_mag += std::log(std::fabs(term));
        }
        if (!exact_zero) {
            for (size_t j = 0; j < n; ++j) {
                if (j == k) continue;
                const double term = 1.0 - zeros[k] / zeros[j];
                if (term == 0.0) throw numeric_error("build_mixture: repeated zero");
                if (term < 0.0) sign = -sign;
                log_mag -= std::log(std::fabs(term));
            }
        }
        mix.weights[k] = exact_zero ? 0.0 : sign * std::exp(log_mag);
    }

    double total = 0.0, total_abs = 0.0;
    for (double w : mix.weights) {
        total += w;
        total_abs += std::fabs(w);
        if (w < 0.0) mix.all_nonnegative = false;
    }
    if (std::fabs(total - 1.0) > 1e-6)
        throw numeric_error(fmt(
            "build_mixture: weights sum to %.12g (cancellation; reduce truncation or adjust q)",
            total));
    mix.total_abs = total_abs;

    mix.cum_abs.resize(n);
    double acc = 0.0;
    for (size_t k = 0; k < n; ++k) {
        acc += std::fabs(mix.weights[k]);
        mix.cum_abs[k] = acc;
    }
    mix.cum_abs[n - 1] = total_abs; // guard against rounding at the top

    // The truncated density must stay nonnegative; sample it on a log grid.
    if (!mix.all_nonnegative) {
        const double x_lo = 1e-6 / mix.rates[n - 1];
        const double x_hi = 40.0 / mix.rates[0];
        const double step = std::log(x_hi / x_lo) / 999.0;
        const double floor = -1e-10 * mix.envelope_abs(0.0);
        for (int i = 0; i < 1000; ++i) {
            const double x = x_lo * std::exp(step * i);
            if (mix.density_abs(x) < floor)
                throw numeric_error(fmt(
                    "build_mixture: negative mixture density %.3e at x=%.6g",
                    mix.density_abs(x), x));
        }
    }
    return mix;
}

double sample_factor(const ExponentialMixture& mix, rng::UniformStream& stream) {
    const size_t n = mix.rates.size();
    if (n == 1) return rng::exponential(stream, mix.rates[0]);

    if (mix.all_nonnegative) {
        const double u = stream.next() * mix.total_abs;
        const size_t k = std::upper_bound(mix.cum_abs.begin(), mix.cum_abs.end(), u) -
                         mix.cum_abs.begin();
        return rng::exponential(stream, mix.rates[std::min(k, n - 1)]);
    }

    // Signed weights: propose from the |w| mixture and accept with f/h.
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double u = stream.next() * mix.total_abs;
        const size_t k = std::upper_bound(mix.cum_abs.begin(), mix.cum_abs.end(), u) -
                         mix.cum_abs.begin();
        const double x = rng::exponential(stream, mix.rates[std::min(k, n - 1)]);
        const double f = mix.density_abs(x);
        const double h = mix.envelope_abs(x);
        if (f <= 0.0) continue;
        if (stream.next() * h <= f) return x;
    }
    throw numeric_error("sample_factor: rejection cap hit (badly signed mixture)");
}

FactorSampler::FactorSampler(const models::LevyModel& m, double q, const FactorOptions& opts)
    : q_(q) {
    if (q <= 0.0) throw config_error("FactorSampler: q must be positive");

    if (m.is_brownian()) {
        const BmFactorRates r = bm_factor_rates(m.bm(), q);
        sup_.side = Side::sup;
        sup_.rates = {r.sup_rate};
        sup_.weights = {1.0};
        sup_.cum_abs = {1.0};
        inf_.side = Side::inf;
        inf_.rates = {r.inf_rate};
        inf_.weights = {1.0};
        inf_.cum_abs = {1.0};
        return;
    }

    const models::BetaParams& p = m.beta_params();

    // The ladder must reach past the natural factor scale or the mixture
    // variance inflates: the truncation error in the second moment grows
    // like q / (b N)^2 for jump-dominated models and collapses once
    // b N > sigma sqrt(2q) when the Gaussian part sets the scale. Raise the
    // requested truncation to hold the variance error near 1e-2 at large q.
    double b_min = std::numeric_limits<double>::infinity();
    if (p.c1 > 0.0) b_min = std::min(b_min, p.b1);
    if (p.c2 > 0.0) b_min = std::min(b_min, p.b2);
    const double reach = p.sigma > 0.0 ? 1.7 * p.sigma * std::sqrt(2.0 * q) + 25.0 * b_min
                                       : 7.0 * std::sqrt(q);
    const int n_scale = static_cast<int>(std::ceil(reach / b_min));
    const int n_eff = std::max(opts.truncation, n_scale);

    if (!opts.convergence_check || n_eff > opts.truncation) {
        // An auto-raised ladder already carries the convergence margin the
        // N-versus-2N comparison would certify.
        const ZeroSet zs = find_zeros(p, q, n_eff, opts.zeros);
        sup_ = build_mixture(p, zs, Side::sup);
        inf_ = build_mixture(p, zs, Side::inf);
        return;
    }

    // The gaps are solved independently, so the first N+1 zeros of the 2N
    // set are exactly the N-truncation zeros; one 2N solve covers both.
    const ZeroSet zs2 = find_zeros(p, q, 2 * opts.truncation, opts.zeros);
    ZeroSet zs;
    zs.q = q;
    zs.truncation = opts.truncation;
    const std::size_t keep = static_cast<std::size_t>(opts.truncation) + 1;
    zs.zeros_pos.assign(zs2.zeros_pos.begin(),
                        zs2.zeros_pos.begin() + std::min(keep, zs2.zeros_pos.size()));
    zs.zeros_neg.assign(zs2.zeros_neg.begin(),
                        zs2.zeros_neg.begin() + std::min(keep, zs2.zeros_neg.size()));

    sup_ = build_mixture(p, zs, Side::sup);
    inf_ = build_mixture(p, zs, Side::inf);
    const ExponentialMixture sup2 = build_mixture(p, zs2, Side::sup);
    const ExponentialMixture inf2 = build_mixture(p, zs2, Side::inf);
    sup_drift_ = std::fabs(sup_.mean_abs() - sup2.mean_abs());
    inf_drift_ = std::fabs(inf_.mean_abs() - inf2.mean_abs());
    if (sup_drift_ > opts.convergence_tol || inf_drift_ > opts.convergence_tol)
        throw numeric_error(fmt(
            "FactorSampler: mixture mean moved by %.3e / %.3e between truncations "
            "(raise truncation)",
            sup_drift_, inf_drift_));
}

} // namespace whmc::factors
