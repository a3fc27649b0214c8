#include "whmc/estimators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <memory>
#include <thread>

#include "whmc/errors.hpp"
#include "whmc/walk.hpp"

namespace whmc::estimators {

namespace {

struct SamplePoint {
    double value = 0.0;
    double cost = 0.0;
};

struct Accumulated {
    stats::RunningStats value;
    double cost = 0.0;
};

constexpr std::int64_t kChunk = 4096;

// Chunked map-reduce over sample indices. Chunks are assigned round-robin
// to threads and merged in ascending chunk order, so the result does not
// depend on the thread count.
template <class Fn>
Accumulated run_chunked(std::int64_t samples, std::int64_t offset, int threads, Fn&& worker) {
    const std::int64_t nchunks = (samples + kChunk - 1) / kChunk;
    std::vector<Accumulated> per_chunk(static_cast<size_t>(nchunks));

    auto run_chunk = [&](std::int64_t c) {
        Accumulated acc;
        const std::int64_t lo = c * kChunk;
        const std::int64_t hi = std::min(samples, lo + kChunk);
        for (std::int64_t i = lo; i < hi; ++i) {
            const SamplePoint p = worker(offset + i);
            acc.value.add(p.value);
            acc.cost += p.cost;
        }
        per_chunk[static_cast<size_t>(c)] = acc;
    };

    const int T = std::max(1, std::min(threads, 64));
    if (T == 1 || nchunks <= 1) {
        for (std::int64_t c = 0; c < nchunks; ++c) run_chunk(c);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(T);
        for (int tid = 0; tid < T; ++tid) {
            pool.emplace_back([&, tid] {
                try {
                    for (std::int64_t c = tid; c < nchunks; c += T) run_chunk(c);
                } catch (...) {
                    errors[tid] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    Accumulated total;
    for (const Accumulated& a : per_chunk) {
        total.value.merge(a.value);
        total.cost += a.cost;
    }
    return total;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
        .count();
}

// One level of the telescope: level 0 is a plain walk on grid n, higher
// levels are coupled fine/coarse differences with fine grid n.
LevelResult run_level(const models::LevyModel& m, int level, std::int64_t n, std::int64_t samples,
                      std::int64_t offset, double t, const payoffs::Payoff& f,
                      const RunOptions& opts) {
    if (samples < 1) throw config_error("run_level: need at least one sample");
    if (n < 1 || (level >= 1 && n < 2)) throw config_error("run_level: grid too small");
    const auto t0 = std::chrono::steady_clock::now();

    Accumulated acc;
    if (opts.horizon == Horizon::deterministic_t) {
        if (!m.is_brownian())
            throw config_error("deterministic horizon is implemented for Brownian motion only");
        const models::BrownianMotion bm = m.bm();
        if (level == 0) {
            acc = run_chunked(samples, offset, opts.threads, [&](std::int64_t idx) {
                auto ss = walk::make_sample_streams(opts.seed, level, opts.replica, idx);
                const walk::WalkState w =
                    walk::simulate_t_horizon_bm(bm, static_cast<int>(n), t, ss);
                return SamplePoint{f(w.v, w.j), static_cast<double>(w.steps)};
            });
        } else {
            acc = run_chunked(samples, offset, opts.threads, [&](std::int64_t idx) {
                auto ss = walk::make_sample_streams(opts.seed, level, opts.replica, idx);
                const coupling::CoupledDraw d =
                    coupling::coupled_t_sample_bm(bm, static_cast<int>(n / 2), t, ss);
                return SamplePoint{f(d.fine.v, d.fine.j) - f(d.coarse.v, d.coarse.j),
                                   d.cost_units};
            });
        }
    } else if (level == 0) {
        const factors::FactorSampler fs(m, n / t, opts.factor);
        acc = run_chunked(samples, offset, opts.threads, [&](std::int64_t idx) {
            auto ss = walk::make_sample_streams(opts.seed, level, opts.replica, idx);
            const walk::WalkState w =
                walk::simulate_gamma_horizon(fs, static_cast<int>(n), t, ss);
            return SamplePoint{f(w.v, w.j), static_cast<double>(n)};
        });
    } else {
        const factors::FactorSampler fine_fs(m, n / t, opts.factor);
        std::unique_ptr<factors::FactorSampler> coarse_fs;
        if (opts.completion == coupling::Completion::direct_coarse)
            coarse_fs = std::make_unique<factors::FactorSampler>(m, n / (2.0 * t), opts.factor);
        acc = run_chunked(samples, offset, opts.threads, [&](std::int64_t idx) {
            auto ss = walk::make_sample_streams(opts.seed, level, opts.replica, idx);
            const coupling::CoupledDraw d = coupling::coupled_gamma_sample(
                fine_fs, coarse_fs.get(), static_cast<int>(n / 2), t, ss, opts.completion);
            return SamplePoint{f(d.fine.v, d.fine.j) - f(d.coarse.v, d.coarse.j), d.cost_units};
        });
    }

    LevelResult r;
    r.level = level;
    r.n = n;
    r.samples = samples;
    r.mean = acc.value.mean();
    r.variance = acc.value.variance();
    r.cost_units = acc.cost;
    r.wall_ms = ms_since(t0);
    return r;
}

} // namespace

Allocation allocate_samples(const std::vector<double>& variances,
                            const std::vector<double>& costs, double target_stat_error) {
    if (variances.empty() || variances.size() != costs.size())
        throw config_error("allocate_samples: variance/cost arrays disagree");
    if (!(target_stat_error > 0.0))
        throw config_error("allocate_samples: target error must be positive");

    Allocation out;
    out.samples.resize(variances.size());
    double s = 0.0;
    for (size_t j = 0; j < variances.size(); ++j) {
        if (!(costs[j] > 0.0)) throw config_error("allocate_samples: nonpositive cost");
        if (!std::isfinite(variances[j])) throw config_error("allocate_samples: bad variance");
        if (variances[j] > 0.0) s += std::sqrt(variances[j] * costs[j]);
    }
    const double inv_e2 = 1.0 / (target_stat_error * target_stat_error);
    for (size_t l = 0; l < variances.size(); ++l) {
        if (variances[l] <= 0.0) {
            out.samples[l] = 2;
            out.degenerate = true;
            continue;
        }
        const double m = std::ceil(inv_e2 * std::sqrt(variances[l] / costs[l]) * s);
        if (m > 1e15) throw numeric_error("allocate_samples: sample count overflow");
        out.samples[l] = std::max<std::int64_t>(2, static_cast<std::int64_t>(m));
    }
    return out;
}

LevelResult single_level_estimate(const models::LevyModel& m, int n, std::int64_t samples,
                                  double t, const payoffs::Payoff& f, const RunOptions& opts) {
    if (t <= 0.0) throw config_error("single_level_estimate: t must be positive");
    return run_level(m, 0, n, samples, 0, t, f, opts);
}

MlmcReport mlmc_estimate(const models::LevyModel& m, const LevelPlan& plan, double t,
                         const payoffs::Payoff& f, const RunOptions& opts) {
    if (t <= 0.0) throw config_error("mlmc_estimate: t must be positive");
    if (plan.n0 < 1 || plan.max_level < 0) throw config_error("mlmc_estimate: bad level plan");
    const int L = plan.max_level;
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<std::int64_t> m_per_level = plan.samples;
    MlmcReport report;
    if (m_per_level.empty()) {
        if (!(plan.target_stat_error > 0.0))
            throw config_error("mlmc_estimate: need explicit samples or a target error");
        if (plan.pilot_samples < 2) throw config_error("mlmc_estimate: pilot too small");
        std::vector<double> vars(L + 1), costs(L + 1);
        for (int l = 0; l <= L; ++l) {
            const std::int64_t n = static_cast<std::int64_t>(plan.n0) << l;
            const LevelResult pr =
                run_level(m, l, n, plan.pilot_samples, kPilotSampleOffset, t, f, opts);
            vars[l] = pr.variance;
            costs[l] = pr.cost_units / static_cast<double>(pr.samples);
        }
        const Allocation alloc = allocate_samples(vars, costs, plan.target_stat_error);
        m_per_level = alloc.samples;
        report.allocation_degenerate = alloc.degenerate;
    } else if (static_cast<int>(m_per_level.size()) != L + 1) {
        throw config_error("mlmc_estimate: explicit samples must cover every level");
    }

    double var_sum = 0.0;
    for (int l = 0; l <= L; ++l) {
        const std::int64_t n = static_cast<std::int64_t>(plan.n0) << l;
        const LevelResult r = run_level(m, l, n, m_per_level[l], 0, t, f, opts);
        report.estimate += r.mean;
        var_sum += r.variance / static_cast<double>(r.samples);
        report.total_cost_units += r.cost_units;
        report.levels.push_back(r);
    }
    report.stat_error = std::sqrt(var_sum);
    if (L >= 1)
        report.bias_proxy =
            std::fabs(report.levels.back().mean) / (std::pow(2.0, opts.bias_alpha) - 1.0);
    report.wall_ms = ms_since(t0);
    return report;
}

MseParts mse_decomposition(const MlmcReport& r, double reference) {
    MseParts p;
    p.stat_sq = r.stat_error * r.stat_error;
    const double bias = r.estimate - reference;
    p.bias_sq = bias * bias;
    p.total = p.stat_sq + p.bias_sq;
    return p;
}

MseParts mse_decomposition(const MlmcReport& r) {
    MseParts p;
    p.stat_sq = r.stat_error * r.stat_error;
    p.bias_sq = r.bias_proxy * r.bias_proxy;
    p.total = p.stat_sq + p.bias_sq;
    return p;
}

} // namespace whmc::estimators
