#pragma once

#include <complex>
#include <string>
#include <vector>

#include "whmc/models.hpp"
#include "whmc/payoffs.hpp"
#include "whmc/quadrature.hpp"
#include "whmc/stats.hpp"

// Validation helpers: closed-form horizon moments, the exact walk
// characteristic function, empirical rate fits, and the published rate
// exponents the observed slopes are compared against.

namespace whmc::diagnostics {

struct TimeMoments {
    double mean_abs = 0.0; // E|tau - t|
    double mean_sq = 0.0;  // E[(tau - t)^2]
};

// Gamma(n, n/t) horizon: E[(tau-t)^2] = t^2/n, E|tau-t| = 2t e^{-n} n^n / n!.
TimeMoments gamma_time_moments(int n, double t);

// Deterministic-horizon stopping rule overshoots t by Exp(n/t):
// E|tau-t| = t/n, E[(tau-t)^2] = 2 t^2 / n^2.
TimeMoments t_overshoot_moments(int n, double t);

// Second moment of the horizon displacement X_tau - X_t given the model's
// per-unit-time mean/variance: V[X1] E|tau-t| + (E X1)^2 E[(tau-t)^2].
double horizon_displacement_second_moment(const models::Moments& mom, const TimeMoments& tm);

// Exact characteristic function of the walk terminal value after n pair
// steps at rate n/t: (1 + t Psi(theta)/n)^{-n}.
std::complex<double> walk_cf_gamma(const models::LevyModel& m, double theta, int n, double t,
                                   const models::EvalOptions& opts = {});

// Least squares of log2(y) on log2(x); the decay rate is -slope. Needs at
// least 4 strictly positive points.
stats::FitResult fit_rates(const std::vector<double>& x, const std::vector<double>& y);

// Published RMSE-versus-cost exponents by Blumenthal-Getoor index rho.
// quoted rows restate printed values; approximate rows interpolate between
// them to trace the comparison curves.
struct RateCurvePoint {
    std::string method;
    double rho = 0.0;
    double exponent = 0.0;
    std::string provenance; // "quoted" | "approximate"
};

std::vector<RateCurvePoint> theoretical_rate_curves(const std::vector<double>& rho_grid);

// Knock-in put reference for Brownian motion by reflection-principle
// quadrature of the joint (terminal, max) density.
double bm_barrier_put_reference(const models::BrownianMotion& bm, const payoffs::BarrierSpec& b,
                                double t, const quad::Tolerance& tol = {});

} // namespace whmc::diagnostics
