#include "whmc/models.hpp"

#include <cmath>

#include "whmc/quadrature.hpp"

namespace whmc::models {

namespace {

void validate_side(double c, double a, double b, double lam, const char* side) {
    if (c < 0.0 || !std::isfinite(c)) throw config_error(std::string("beta params: c") + side + " must be >= 0");
    if (c == 0.0) return;
    if (!(a > 0.0) || !(b > 0.0)) throw config_error(std::string("beta params: a,b") + side + " must be > 0");
    if (!(lam > 0.0 && lam < 3.0)) throw config_error(std::string("beta params: lambda") + side + " must lie in (0,3)");
}

void validate(const BetaParams& p) {
    validate_side(p.c1, p.a1, p.b1, p.lambda1, "1");
    validate_side(p.c2, p.a2, p.b2, p.lambda2, "2");
    if (!(p.sigma >= 0.0)) throw config_error("beta params: sigma must be >= 0");
    if (!std::isfinite(p.a)) throw config_error("beta params: a must be finite");
    if (p.sigma == 0.0 && p.c1 == 0.0 && p.c2 == 0.0)
        throw config_error("beta params: degenerate process (no diffusion, no jumps)");
}

// e^u - 1 - u, stable near 0, for real and complex arguments.
template <class W> W expm1m(W u) {
    if (std::abs(u) > 0.5) return std::exp(u) - 1.0 - u;
    W term = u * u / 2.0;
    W sum = term;
    for (int j = 3; j < 40; ++j) {
        term *= u / static_cast<double>(j);
        sum += term;
        if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    }
    return sum;
}

// One-sided density with parameters folded to the positive half-axis.
double side_density(double c, double ab, double b, double lam, double x) {
    return c * std::exp(-ab * x) * std::pow(-std::expm1(-b * x), -lam);
}

// Generalized binomial coefficients of (1-u)^{-lam}: beta_0 = 1,
// beta_k = beta_{k-1} (lam+k-1)/k, all positive for lam > 0.
struct BinomSeries {
    double lam;
    double value = 1.0;
    int k = 0;
    void advance() {
        ++k;
        value *= (lam + static_cast<double>(k) - 1.0) / static_cast<double>(k);
    }
};

// Compensated one-sided jump integral
//   \int_0^inf (e^{wx} - 1 - wx 1_{x<1}) c e^{-a b x}(1-e^{-bx})^{-lam} dx
// continued across the poles w = b(a+k). The domain splits at
// x_s = min(1, 1/max(1, Re w)) so every piece stays polynomially bounded:
// quadrature on (0, x_s] plus an exactly-integrated exponential series for
// the tail. With a fixed split at 1 the pieces reach e^{Re w} and cancel
// catastrophically.
template <class W>
W jump_side(double c, double a, double b, double lam, W w, const EvalOptions& opts) {
    if (c == 0.0) return W{};
    const double rew = std::real(std::complex<double>(w));
    const double xs = std::min(1.0, 1.0 / std::max(1.0, rew));

    quad::Tolerance tol{opts.abs_tol, opts.rel_tol, 4000};
    W q = quad::integrate_singular_lower(
        [&](double x) -> W { return expm1m(w * x) * side_density(c, a * b, b, lam, x); }, xs, tol);

    // Tail series: sum_k beta_k c [ e^{(w-mu_k)xs}/(mu_k-w) - e^{-mu_k xs}/mu_k
    //                               - w \int_{xs}^{1} x e^{-mu_k x} dx ].
    W s{};
    BinomSeries bin{lam};
    double magnitude = 0.0;
    const bool partial_compensation = xs < 1.0;
    for (int k = 0; k < 2000000; ++k) {
        const double mu = b * (a + static_cast<double>(k));
        const W denom = W(mu) - w;
        if (std::abs(denom) == 0.0) throw numeric_error("log_mgf: evaluation at a pole");
        W term = std::exp((w - mu) * xs) / denom - std::exp(-mu * xs) / mu;
        if (partial_compensation) {
            const double xint =
                ((1.0 + mu * xs) * std::exp(-mu * xs) - (1.0 + mu) * std::exp(-mu)) / (mu * mu);
            term -= w * xint;
        }
        term *= c * bin.value;
        s += term;
        magnitude = std::max(magnitude, std::abs(s));
        const double tmag = std::abs(term);
        if (mu > rew + 2.0 * b && tmag <= 1e-17 * (magnitude + std::abs(q)) + 1e-300) break;
        bin.advance();
        if (k == 2000000 - 1) throw numeric_error("log_mgf: jump tail series did not converge");
    }
    return q + s;
}

template <class W> W log_mgf_impl(const BetaParams& p, W w, const EvalOptions& opts) {
    return -p.a * w + 0.5 * p.sigma * p.sigma * w * w + jump_side(p.c1, p.a1, p.b1, p.lambda1, w, opts) +
           jump_side(p.c2, p.a2, p.b2, p.lambda2, -w, opts);
}

// Same sum as jump_side for real w, but the ladder terms at indices k_lo and
// k_lo + 1 contribute only their nonsingular remainders; their pole numerators
// c beta_k e^{(w-mu_k) xs} are reported separately. Must stay term-for-term
// identical to jump_side so regular + num/(mu - w) reproduces psi exactly.
struct SideGap {
    double regular = 0.0;
    double mu_lo = 0.0, num_lo = 0.0;
    double mu_hi = 0.0, num_hi = 0.0;
};

SideGap jump_side_gap(double c, double a, double b, double lam, double w, int k_lo,
                      const EvalOptions& opts) {
    if (c == 0.0) throw numeric_error("log_mgf_gap: side has no jump ladder");
    const double xs = std::min(1.0, 1.0 / std::max(1.0, w));

    SideGap out;
    quad::Tolerance tol{opts.abs_tol, opts.rel_tol, 4000};
    double s = quad::integrate_singular_lower(
        [&](double x) { return expm1m(w * x) * side_density(c, a * b, b, lam, x); }, xs, tol);

    BinomSeries bin{lam};
    double magnitude = 0.0;
    const bool partial_compensation = xs < 1.0;
    for (int k = 0; k < 2000000; ++k) {
        const double mu = b * (a + static_cast<double>(k));
        const double coef = c * bin.value;
        double term;
        if (k == k_lo || k == k_lo + 1) {
            const double num = coef * std::exp((w - mu) * xs);
            if (k == k_lo) {
                out.mu_lo = mu;
                out.num_lo = num;
            } else {
                out.mu_hi = mu;
                out.num_hi = num;
            }
            term = -coef * std::exp(-mu * xs) / mu;
        } else {
            const double denom = mu - w;
            if (denom == 0.0) throw numeric_error("log_mgf_gap: evaluation at a pole");
            term = coef * (std::exp((w - mu) * xs) / denom - std::exp(-mu * xs) / mu);
        }
        if (partial_compensation) {
            const double xint =
                ((1.0 + mu * xs) * std::exp(-mu * xs) - (1.0 + mu) * std::exp(-mu)) / (mu * mu);
            term -= coef * w * xint;
        }
        s += term;
        magnitude = std::max(magnitude, std::abs(s));
        if (mu > w + 2.0 * b && k > k_lo + 1 && std::abs(term) <= 1e-17 * magnitude + 1e-300) break;
        bin.advance();
        if (k == 2000000 - 1) throw numeric_error("log_mgf_gap: jump tail series did not converge");
    }
    if (out.mu_hi == 0.0 && out.num_hi == 0.0)
        throw numeric_error("log_mgf_gap: gap index beyond evaluated ladder");
    out.regular = s;
    return out;
}

// \int_1^inf x^j e^{-mu x} dx for j = 1, 2.
double tail_x1(double mu) { return (1.0 + mu) * std::exp(-mu) / (mu * mu); }
double tail_x2(double mu) { return (mu * mu + 2.0 * mu + 2.0) * std::exp(-mu) / (mu * mu * mu); }

// Series sum of f(mu_k) weighted by the binomial coefficients; geometric
// convergence since f decays like e^{-mu}.
template <class F> double side_tail_series(double c, double a, double b, double lam, F f) {
    if (c == 0.0) return 0.0;
    BinomSeries bin{lam};
    double sum = 0.0;
    for (int k = 0; k < 2000000; ++k) {
        const double term = c * bin.value * f(b * (a + static_cast<double>(k)));
        sum += term;
        if (term <= 1e-17 * sum + 1e-300) break;
        bin.advance();
    }
    return sum;
}

double side_x2_near_zero(double c, double a, double b, double lam, const EvalOptions& opts) {
    if (c == 0.0) return 0.0;
    quad::Tolerance tol{opts.abs_tol, opts.rel_tol, 4000};
    return quad::integrate_singular_lower(
        [&](double x) { return x * x * side_density(c, a * b, b, lam, x); }, 1.0, tol);
}

} // namespace

LevyModel LevyModel::brownian(double mu, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(mu)) throw config_error("brownian: sigma must be > 0 and mu finite");
    LevyModel m;
    m.bm_ = BrownianMotion{mu, sigma};
    return m;
}

LevyModel LevyModel::beta(const BetaParams& p) {
    validate(p);
    LevyModel m;
    m.beta_ = p;
    // A1 finiteness of the tail second moment is automatic for exponential
    // tails; evaluate it once so a pathological parameter set fails loudly.
    const double tail = side_tail_series(p.c1, p.a1, p.b1, p.lambda1, tail_x2) +
                        side_tail_series(p.c2, p.a2, p.b2, p.lambda2, tail_x2);
    if (!std::isfinite(tail)) throw numeric_error("beta model: tail second moment not finite");
    return m;
}

const BrownianMotion& LevyModel::bm() const {
    if (!bm_) throw std::logic_error("LevyModel: not a Brownian model");
    return *bm_;
}

const BetaParams& LevyModel::beta_params() const {
    if (!beta_) throw std::logic_error("LevyModel: not a beta model");
    return *beta_;
}

double beta_levy_density(const BetaParams& p, double x) {
    validate(p);
    if (x == 0.0 || !std::isfinite(x)) throw std::invalid_argument("beta_levy_density: x must be finite and nonzero");
    if (x > 0.0) return side_density(p.c1, p.a1 * p.b1, p.b1, p.lambda1, x);
    return side_density(p.c2, p.a2 * p.b2, p.b2, p.lambda2, -x);
}

std::complex<double> char_exponent(const LevyModel& m, double z, const EvalOptions& opts) {
    if (m.is_brownian()) {
        const auto& b = m.bm();
        return std::complex<double>(0.5 * b.sigma * b.sigma * z * z, -b.mu * z);
    }
    const std::complex<double> iz(0.0, z);
    return -log_mgf_impl(m.beta_params(), iz, opts);
}

double log_mgf(const LevyModel& m, double w, const EvalOptions& opts) {
    if (m.is_brownian()) {
        const auto& b = m.bm();
        return b.mu * w + 0.5 * b.sigma * b.sigma * w * w;
    }
    return log_mgf_impl(m.beta_params(), w, opts);
}

GapSplit log_mgf_gap(const LevyModel& m, double w, bool mirror, int k_lo,
                     const EvalOptions& opts) {
    if (m.is_brownian()) throw config_error("log_mgf_gap: requires a jump ladder");
    if (!(w > 0.0)) throw config_error("log_mgf_gap: w must lie right of zero");
    const auto& p = m.beta_params();
    // mirror evaluates psi(-w): the singular ladder swaps to the other side
    // and the drift/other-side contributions are taken at -w.
    const SideGap g = mirror ? jump_side_gap(p.c2, p.a2, p.b2, p.lambda2, w, k_lo, opts)
                             : jump_side_gap(p.c1, p.a1, p.b1, p.lambda1, w, k_lo, opts);
    const double drift = mirror ? p.a * w : -p.a * w;
    const double other = mirror ? jump_side(p.c1, p.a1, p.b1, p.lambda1, -w, opts)
                                : jump_side(p.c2, p.a2, p.b2, p.lambda2, -w, opts);
    GapSplit out;
    out.regular = drift + 0.5 * p.sigma * p.sigma * w * w + other + g.regular;
    out.mu_lo = g.mu_lo;
    out.num_lo = g.num_lo;
    out.mu_hi = g.mu_hi;
    out.num_hi = g.num_hi;
    return out;
}

Moments moments(const LevyModel& m, const EvalOptions& opts) {
    if (m.is_brownian()) return {m.bm().mu, m.bm().sigma * m.bm().sigma};
    const auto& p = m.beta_params();
    const double tail1 = side_tail_series(p.c1, p.a1, p.b1, p.lambda1, tail_x1) -
                         side_tail_series(p.c2, p.a2, p.b2, p.lambda2, tail_x1);
    const double x2 = side_x2_near_zero(p.c1, p.a1, p.b1, p.lambda1, opts) +
                      side_x2_near_zero(p.c2, p.a2, p.b2, p.lambda2, opts) +
                      side_tail_series(p.c1, p.a1, p.b1, p.lambda1, tail_x2) +
                      side_tail_series(p.c2, p.a2, p.b2, p.lambda2, tail_x2);
    return {-p.a + tail1, p.sigma * p.sigma + x2};
}

Variation variation(const LevyModel& m) {
    if (m.is_brownian()) return m.bm().sigma > 0.0 ? Variation::unbounded : Variation::bounded;
    const auto& p = m.beta_params();
    const bool jumps_bv = (p.c1 == 0.0 || p.lambda1 < 2.0) && (p.c2 == 0.0 || p.lambda2 < 2.0);
    return (p.sigma == 0.0 && jumps_bv) ? Variation::bounded : Variation::unbounded;
}

double bg_index(const BetaParams& p) {
    validate(p);
    double lam = 0.0;
    if (p.c1 > 0.0) lam = std::max(lam, p.lambda1);
    if (p.c2 > 0.0) lam = std::max(lam, p.lambda2);
    const double rho = lam - 1.0;
    return std::min(std::max(rho, 0.0), std::nextafter(2.0, 0.0));
}

std::vector<double> psi_poles_positive(const BetaParams& p, int count) {
    std::vector<double> poles;
    if (p.c1 == 0.0) return poles;
    poles.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) poles.push_back(p.b1 * (p.a1 + static_cast<double>(k)));
    return poles;
}

std::vector<double> psi_poles_negative(const BetaParams& p, int count) {
    std::vector<double> poles;
    if (p.c2 == 0.0) return poles;
    poles.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) poles.push_back(-p.b2 * (p.a2 + static_cast<double>(k)));
    return poles;
}

} // namespace whmc::models
