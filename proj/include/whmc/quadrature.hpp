#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "whmc/errors.hpp"

// Gauss-Kronrod 7/15 panels with an adaptive bisection driver, plus a
// geometric-panel driver for integrands with an integrable singularity at
// the lower endpoint (the Lévy density behaves like x^{-lambda} there).

namespace whmc::quad {

namespace detail {

// QUADPACK abscissae/weights for the 15-point Kronrod rule on [-1,1] and
// the embedded 7-point Gauss rule (even-index Kronrod nodes are Gauss).
inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

inline double norm_of(double v) { return std::fabs(v); }
inline double norm_of(const std::complex<double>& v) { return std::abs(v); }

} // namespace detail

template <class T> struct PanelResult {
    T value{};
    double error = 0.0;
};

// One GK15 panel on [a,b]; error estimate follows the QUADPACK sharpening.
template <class F, class T = std::invoke_result_t<F, double>>
PanelResult<T> gk15(F&& f, double a, double b) {
    using detail::norm_of;
    const double h = 0.5 * (b - a);
    const double c = 0.5 * (a + b);
    T fv[15];
    fv[7] = f(c);
    for (int i = 0; i < 7; ++i) {
        const double dx = h * detail::xgk[i];
        fv[i] = f(c - dx);
        fv[14 - i] = f(c + dx);
    }
    T resk = detail::wgk[7] * fv[7];
    double resabs = detail::norm_of(resk);
    T resg = detail::wg[3] * fv[7];
    for (int i = 0; i < 7; ++i) {
        resk += detail::wgk[i] * (fv[i] + fv[14 - i]);
        resabs += detail::wgk[i] * (norm_of(fv[i]) + norm_of(fv[14 - i]));
    }
    for (int i = 0; i < 3; ++i) {
        const int j = 2 * i + 1;
        resg += detail::wg[i] * (fv[j] + fv[14 - j]);
    }
    const T mean = resk * 0.5;
    double resasc = detail::wgk[7] * norm_of(fv[7] - mean);
    for (int i = 0; i < 7; ++i)
        resasc += detail::wgk[i] * (norm_of(fv[i] - mean) + norm_of(fv[14 - i] - mean));
    resasc *= std::fabs(h);
    resabs *= std::fabs(h);

    PanelResult<T> r;
    r.value = resk * h;
    double err = norm_of((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    const double round = 50.0 * std::numeric_limits<double>::epsilon() * resabs;
    r.error = std::max(err, round);
    return r;
}

struct Tolerance {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    std::size_t max_panels = 4000;
};

// Adaptive bisection: split the worst panel until the summed error estimate
// meets the tolerance. Plain array-backed worklist, worst-first.
template <class F, class T = std::invoke_result_t<F, double>>
T integrate(F&& f, double a, double b, const Tolerance& tol = {}) {
    struct Seg {
        double a, b, err;
        T val;
    };
    std::vector<Seg> segs;
    segs.reserve(64);
    auto first = gk15(f, a, b);
    segs.push_back({a, b, first.error, first.value});
    for (std::size_t iter = 0; iter < tol.max_panels; ++iter) {
        T total{};
        double toterr = 0.0;
        std::size_t worst = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            total += segs[i].val;
            toterr += segs[i].err;
            if (segs[i].err > segs[worst].err) worst = i;
        }
        if (toterr <= std::max(tol.abs_tol, tol.rel_tol * detail::norm_of(total))) return total;
        Seg s = segs[worst];
        const double m = 0.5 * (s.a + s.b);
        if (!(m > s.a && m < s.b)) return total; // interval exhausted at machine resolution
        auto left = gk15(f, s.a, m);
        auto right = gk15(f, m, s.b);
        segs[worst] = {s.a, m, left.error, left.value};
        segs.push_back({m, s.b, right.error, right.value});
    }
    throw numeric_error("quadrature: adaptive refinement did not converge");
}

// Integral over (0, b] of an integrand with an integrable power singularity
// at 0: geometric panels [b/2^{j+1}, b/2^j] are summed until two consecutive
// panels fall below the absolute cutoff while decreasing.
template <class F, class T = std::invoke_result_t<F, double>>
T integrate_singular_lower(F&& f, double b, const Tolerance& tol = {}) {
    T total{};
    double prev1 = std::numeric_limits<double>::infinity();
    double prev2 = std::numeric_limits<double>::infinity();
    double hi = b;
    const double cutoff = tol.abs_tol / 8.0;
    for (int j = 0; j < 4000; ++j) {
        const double lo = 0.5 * hi;
        Tolerance panel_tol{tol.abs_tol / 16.0, tol.rel_tol, 200};
        T panel = integrate(f, lo, hi, panel_tol);
        total += panel;
        const double mag = detail::norm_of(panel);
        const double ref = std::max(cutoff, tol.rel_tol * detail::norm_of(total) / 8.0);
        if (mag < ref && prev1 < ref && mag <= prev1 && prev1 <= prev2) return total;
        prev2 = prev1;
        prev1 = mag;
        hi = lo;
    }
    throw numeric_error("quadrature: singular-endpoint panels did not converge");
}

} // namespace whmc::quad
