#include "doctest.h"

#include <cmath>
#include <complex>

#include "helpers.hpp"
#include "whmc/errors.hpp"
#include "whmc/factors.hpp"
#include "whmc/models.hpp"
#include "whmc/stats.hpp"
#include "whmc/walk.hpp"

using namespace whmc;

namespace {

models::BetaParams symmetric_beta(double lambda, double sigma, double a = 0.0) {
    models::BetaParams p;
    p.a = a;
    p.sigma = sigma;
    p.lambda1 = p.lambda2 = lambda;
    return p;
}

// Independent characteristic-exponent oracle: adaptive Simpson on the jump
// integral with second-order compensation, split well away from the origin
// singularity via the small-x expansion of the density.
std::complex<double> psi_oracle(const models::BetaParams& p, double theta) {
    auto density = [&](double x) { return models::beta_levy_density(p, x); };
    // 1 - cos u = 2 sin^2(u/2) and sin u - u from its series keep the
    // integrand meaningful against the x^{-lambda} blowup near zero.
    auto one_minus_cos = [](double u) {
        const double s = std::sin(0.5 * u);
        return 2.0 * s * s;
    };
    auto sin_minus_lin = [](double u) {
        if (std::fabs(u) > 1e-3) return std::sin(u) - u;
        const double u2 = u * u;
        return -u * u2 / 6.0 * (1.0 - u2 / 20.0 * (1.0 - u2 / 42.0));
    };
    auto re_part = [&](double x) {
        return one_minus_cos(theta * x) * (density(x) + density(-x));
    };
    auto im_part = [&](double x) {
        if (x < 1.0)
            return sin_minus_lin(theta * x) * (density(x) - density(-x));
        return std::sin(theta * x) * (density(x) - density(-x));
    };
    // (1 - cos) ~ (theta x)^2/2 and (sin - comp) ~ -(theta x)^3/6 kill the
    // x^{-lambda} singularity for lambda < 3, so geometric panels toward 0
    // converge without special handling.
    double re = 0.0, im = 0.0;
    double hi = 1.0;
    for (int j = 0; j < 100; ++j) {
        const double lo = hi * 0.5;
        re += testutil::adaptive_simpson(re_part, lo, hi, 1e-13);
        im += testutil::adaptive_simpson(im_part, lo, hi, 1e-13);
        hi = lo;
        // Even at lambda near 3 the mass below the cutoff is ~ sqrt(cutoff).
        if (hi < 1e-22) break;
    }
    double top = 1.0;
    for (int j = 0; j < 200; ++j) {
        const double next = top + 1.0;
        const double dre = testutil::adaptive_simpson(re_part, top, next, 1e-13);
        const double dim = testutil::adaptive_simpson(im_part, top, next, 1e-13);
        re += dre;
        im += dim;
        top = next;
        if (std::fabs(dre) + std::fabs(dim) < 1e-15 && j > 3) break;
    }
    const std::complex<double> jump(re, -im);
    return std::complex<double>(0.0, p.a * theta) +
           std::complex<double>(0.5 * p.sigma * p.sigma * theta * theta, 0.0) + jump;
}

} // namespace

TEST_CASE("levy density matches its closed form") {
    models::BetaParams p = symmetric_beta(0.5, 0.0);
    const double expect = std::exp(-1.0) / std::sqrt(1.0 - std::exp(-1.0));
    CHECK(models::beta_levy_density(p, 1.0) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(models::beta_levy_density(p, -1.0) == doctest::Approx(expect).epsilon(1e-14));

    p.c2 = 0.0;
    CHECK(models::beta_levy_density(p, -1.0) == 0.0);
    CHECK(models::beta_levy_density(p, 1.0) == doctest::Approx(expect).epsilon(1e-14));

    models::BetaParams q = symmetric_beta(1.5, 0.0);
    q.a1 = 2.0;
    q.b1 = 1.5;
    const double u = std::expm1(-1.5 * 0.7);
    const double direct = std::exp(-2.0 * 1.5 * 0.7) * std::pow(-u, -1.5);
    CHECK(models::beta_levy_density(q, 0.7) == doctest::Approx(direct).epsilon(1e-13));
}

TEST_CASE("parameter domains are enforced") {
    CHECK_THROWS_AS(models::LevyModel::brownian(0.0, -1.0), config_error);
    CHECK_THROWS_AS(models::LevyModel::brownian(0.0, 0.0), config_error);

    models::BetaParams p = symmetric_beta(1.5, 0.0);
    p.lambda1 = 3.0;
    CHECK_THROWS_AS(models::LevyModel::beta(p), config_error);
    p = symmetric_beta(1.5, 0.0);
    p.lambda2 = 0.0;
    CHECK_THROWS_AS(models::LevyModel::beta(p), config_error);
    p = symmetric_beta(1.5, 0.0);
    p.b1 = 0.0;
    CHECK_THROWS_AS(models::LevyModel::beta(p), config_error);
    p = symmetric_beta(1.5, 0.0);
    p.c1 = -1.0;
    CHECK_THROWS_AS(models::LevyModel::beta(p), config_error);
    p = symmetric_beta(1.5, 0.0);
    p.sigma = -0.5;
    CHECK_THROWS_AS(models::LevyModel::beta(p), config_error);
    p = symmetric_beta(1.5, 0.0);
    p.c1 = p.c2 = 0.0;
    CHECK_THROWS_AS(models::LevyModel::beta(p), config_error);
}

TEST_CASE("brownian characteristic exponent is the quadratic") {
    auto m = models::LevyModel::brownian(0.0, 1.0);
    const auto v = models::char_exponent(m, 2.0);
    CHECK(v.real() == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(v.imag() == doctest::Approx(0.0).epsilon(1e-14));

    auto md = models::LevyModel::brownian(0.7, 2.0);
    const double theta = 1.3;
    const auto w = models::char_exponent(md, theta);
    CHECK(w.real() == doctest::Approx(0.5 * 4.0 * theta * theta).epsilon(1e-14));
    CHECK(w.imag() == doctest::Approx(-0.7 * theta).epsilon(1e-14));
}

TEST_CASE("characteristic exponent vanishes at zero and matches the oracle") {
    for (double lambda : {0.5, 1.5, 2.5}) {
        auto p = symmetric_beta(lambda, 1.0, 0.3);
        auto m = models::LevyModel::beta(p);
        const auto z0 = models::char_exponent(m, 0.0);
        CHECK(std::abs(z0) <= 1e-12);

        const auto got = models::char_exponent(m, 1.0);
        const auto want = psi_oracle(p, 1.0);
        CHECK(got.real() == doctest::Approx(want.real()).epsilon(1e-8));
        CHECK(std::fabs(got.imag() - want.imag()) <=
              1e-8 * std::max(1.0, std::fabs(want.imag())));
    }

    // Asymmetric ladder at a second frequency.
    models::BetaParams p = symmetric_beta(1.5, 0.0, -0.2);
    p.a1 = 2.0;
    p.b2 = 1.7;
    p.lambda2 = 0.8;
    auto m = models::LevyModel::beta(p);
    for (double theta : {0.5, 2.0}) {
        const auto got = models::char_exponent(m, theta);
        const auto want = psi_oracle(p, theta);
        CHECK(std::abs(got - want) <= 1e-8 * std::max(1.0, std::abs(want)));
    }
}

TEST_CASE("log mgf agrees with the analytic continuation of the exponent") {
    // Inside the strip (no pole crossed) psi(w) = -Psi(-iw) can be checked
    // against the real part structure: for a symmetric model psi(w) equals
    // psi(-w) plus twice the odd drift part.
    // Zero drift and symmetric jumps make psi even in w.
    auto p = symmetric_beta(1.5, 1.0);
    auto m = models::LevyModel::beta(p);
    const double w = 0.4; // first pole sits at b1*a1 = 1
    const double plus = models::log_mgf(m, w);
    const double minus = models::log_mgf(m, -w);
    CHECK(plus == doctest::Approx(minus).epsilon(1e-10));
    CHECK(models::log_mgf(m, 0.0) == doctest::Approx(0.0).epsilon(1e-12));

    // Brownian closed form.
    auto bm = models::LevyModel::brownian(0.5, 2.0);
    CHECK(models::log_mgf(bm, 0.3) ==
          doctest::Approx(0.5 * 0.3 + 0.5 * 4.0 * 0.09).epsilon(1e-14));

    // On a pole the evaluation refuses.
    CHECK_THROWS_AS(models::log_mgf(m, 1.0), numeric_error);
}

TEST_CASE("gap split reproduces the direct log mgf away from poles") {
    auto p = symmetric_beta(1.5, 1.0, 1.0);
    auto m = models::LevyModel::beta(p);
    // Gap between poles 2 and 3 (k_lo = 1): split evaluation must agree
    // with the direct series where both are finite.
    for (double w : {2.2, 2.5, 2.9}) {
        const double direct = models::log_mgf(m, w);
        const double split = models::gap_value(models::log_mgf_gap(m, w, false, 1), w);
        CHECK(std::fabs(split - direct) <= 1e-9 * std::max(1.0, std::fabs(direct)));
    }
    // First gap has no lower pole term.
    const auto s0 = models::log_mgf_gap(m, 0.5, false, -1);
    CHECK(s0.num_lo == 0.0);
    const double direct0 = models::log_mgf(m, 0.5);
    CHECK(std::fabs(models::gap_value(s0, 0.5) - direct0) <=
          1e-9 * std::max(1.0, std::fabs(direct0)));
}

TEST_CASE("moments match closed forms and the cf derivative") {
    auto bm = models::LevyModel::brownian(0.3, 1.5);
    const auto mb = models::moments(bm);
    CHECK(mb.mean1 == 0.3);
    CHECK(mb.var1 == 2.25);

    for (double lambda : {0.5, 1.5, 2.5}) {
        auto p = symmetric_beta(lambda, 1.0, 0.7);
        auto m = models::LevyModel::beta(p);
        const auto mo = models::moments(m);
        // Symmetric jumps: the mean comes from the linear coefficient alone.
        CHECK(mo.mean1 == doctest::Approx(-0.7).epsilon(1e-9));

        // Cumulants from fourth-order central differences of the log mgf at
        // zero; psi(0) = 0 drops out of the even stencil.
        const double h = 1e-2;
        const models::EvalOptions tight{1e-12, 1e-11};
        const double f1 = models::log_mgf(m, h, tight), f2 = models::log_mgf(m, 2.0 * h, tight);
        const double g1 = models::log_mgf(m, -h, tight), g2 = models::log_mgf(m, -2.0 * h, tight);
        const double d1 = (8.0 * (f1 - g1) - (f2 - g2)) / (12.0 * h);
        const double d2 = (16.0 * (f1 + g1) - (f2 + g2)) / (12.0 * h * h);
        CHECK(mo.mean1 == doctest::Approx(d1).epsilon(1e-6));
        CHECK(mo.var1 == doctest::Approx(d2).epsilon(1e-6));
    }
}

TEST_CASE("model variance matches the engine's own walk at a fine grid") {
    auto p = symmetric_beta(1.5, 1.0);
    auto m = models::LevyModel::beta(p);
    const auto mo = models::moments(m);

    // With zero mean the terminal value at the gamma clock has variance
    // exactly var1 * t; sample it through the walk itself.
    const int n = 1 << 14;
    const int samples = 3000;
    const double t = 1.0;
    const factors::FactorSampler fs(m, n / t); // truncation floor auto-raises with q
    std::vector<double> vals(samples);
    stats::RunningStats st;
    for (int i = 0; i < samples; ++i) {
        auto ss = walk::make_sample_streams(99, 0, 0, i);
        const walk::WalkState w = walk::simulate_gamma_horizon(fs, n, t, ss);
        vals[i] = w.v;
        st.add(w.v);
    }
    CHECK(std::fabs(stats::z_score(st.mean(), st.std_error(), mo.mean1 * t)) <= 3.0);

    // Standard error of the sample variance from the empirical fourth
    // central moment.
    double m4 = 0.0;
    for (double v : vals) m4 += std::pow(v - st.mean(), 4);
    m4 /= samples;
    const double v2 = st.variance();
    const double se_var = std::sqrt(std::max(m4 - v2 * v2, 0.0) / samples);
    CHECK(std::fabs(v2 - mo.var1 * t) <= 3.0 * se_var);
}

TEST_CASE("variation and the jump activity index follow the ladder exponent") {
    CHECK(models::variation(models::LevyModel::brownian(1.0, 1.0)) ==
          models::Variation::unbounded);

    auto bv = models::LevyModel::beta(symmetric_beta(1.5, 0.0));
    CHECK(models::variation(bv) == models::Variation::bounded);
    auto ubv_sigma = models::LevyModel::beta(symmetric_beta(1.5, 1.0));
    CHECK(models::variation(ubv_sigma) == models::Variation::unbounded);
    auto ubv_jumps = models::LevyModel::beta(symmetric_beta(2.5, 0.0));
    CHECK(models::variation(ubv_jumps) == models::Variation::unbounded);

    CHECK(models::bg_index(symmetric_beta(0.5, 0.0)) == 0.0);
    CHECK(models::bg_index(symmetric_beta(1.5, 0.0)) == doctest::Approx(0.5));
    CHECK(models::bg_index(symmetric_beta(2.5, 0.0)) == doctest::Approx(1.5));
    models::BetaParams mixed = symmetric_beta(1.2, 0.0);
    mixed.lambda2 = 2.8;
    CHECK(models::bg_index(mixed) == doctest::Approx(1.8));
}

TEST_CASE("pole ladders sit on the arithmetic grid") {
    models::BetaParams p = symmetric_beta(1.5, 0.0);
    p.a1 = 2.0;
    p.b1 = 1.5;
    p.a2 = 1.0;
    p.b2 = 3.0;
    const auto pos = models::psi_poles_positive(p, 3);
    REQUIRE(pos.size() == 3);
    CHECK(pos[0] == doctest::Approx(3.0));
    CHECK(pos[1] == doctest::Approx(4.5));
    CHECK(pos[2] == doctest::Approx(6.0));
    const auto neg = models::psi_poles_negative(p, 2);
    REQUIRE(neg.size() == 2);
    CHECK(neg[0] == doctest::Approx(-3.0));
    CHECK(neg[1] == doctest::Approx(-6.0));

    p.c1 = 0.0;
    CHECK(models::psi_poles_positive(p, 3).empty());
}
