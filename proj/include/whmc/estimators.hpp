#pragma once

#include <cstdint>
#include <vector>

#include "whmc/coupling.hpp"
#include "whmc/models.hpp"
#include "whmc/payoffs.hpp"
#include "whmc/stats.hpp"

// Monte Carlo drivers: a plain single-grid estimator and the multilevel
// telescope over grid sizes n0 * 2^l. Sample streams are keyed by (level,
// sample index), so results are independent of thread count; accumulation
// runs over fixed 4096-sample chunks merged in chunk order.

namespace whmc::estimators {

enum class Horizon {
    gamma_like,      // n exponential slices, clock ~ Gamma(n, n/t)
    deterministic_t, // Brownian motion only: stop one slice past t
};

struct RunOptions {
    std::uint64_t seed = 1;
    std::int32_t replica = 0;
    int threads = 1;
    factors::FactorOptions factor{};
    coupling::Completion completion = coupling::Completion::extend_fine;
    Horizon horizon = Horizon::gamma_like;
    double bias_alpha = 0.25; // weak-rate exponent behind the bias proxy
};

struct LevelResult {
    int level = 0;
    std::int64_t n = 0; // grid size; at coupled levels this is the fine size
    std::int64_t samples = 0;
    double mean = 0.0;     // level 0: payoff mean; level >= 1: mean difference
    double variance = 0.0; // unbiased sample variance of the summand
    double cost_units = 0.0;
    double wall_ms = 0.0;
};

struct MlmcReport {
    double estimate = 0.0;
    double stat_error = 0.0; // sqrt(sum_l var_l / M_l)
    double bias_proxy = 0.0; // |mean_L| / (2^alpha - 1); 0 when L == 0
    double total_cost_units = 0.0;
    double wall_ms = 0.0;
    bool allocation_degenerate = false;
    std::vector<LevelResult> levels;
};

struct LevelPlan {
    int n0 = 16;
    int max_level = 0;                 // L >= 0; level l runs at n0 * 2^l
    std::vector<std::int64_t> samples; // explicit M_l (size L+1); empty -> pilot
    double target_stat_error = 0.0;    // required when samples is empty
    std::int64_t pilot_samples = 1000;
};

struct Allocation {
    std::vector<std::int64_t> samples;
    bool degenerate = false; // some level had vanishing pilot variance
};

// M_l = ceil(eps^-2 sqrt(v_l/c_l) sum_j sqrt(v_j c_j)), floored at 2.
Allocation allocate_samples(const std::vector<double>& variances,
                            const std::vector<double>& costs, double target_stat_error);

LevelResult single_level_estimate(const models::LevyModel& m, int n, std::int64_t samples,
                                  double t, const payoffs::Payoff& f, const RunOptions& opts);

MlmcReport mlmc_estimate(const models::LevyModel& m, const LevelPlan& plan, double t,
                         const payoffs::Payoff& f, const RunOptions& opts);

struct MseParts {
    double stat_sq = 0.0;
    double bias_sq = 0.0;
    double total = 0.0;
};

// Bias against a known reference value.
MseParts mse_decomposition(const MlmcReport& r, double reference);
// Bias from the report's own coarse-telescope surrogate.
MseParts mse_decomposition(const MlmcReport& r);

// Pilot draws live far away from production sample indices.
inline constexpr std::int64_t kPilotSampleOffset = std::int64_t{1} << 48;

} // namespace whmc::estimators
