#include "whmc/walk.hpp"

#include <cmath>

#include "whmc/errors.hpp"

namespace whmc::walk {

SampleStreams make_sample_streams(std::uint64_t seed, std::int32_t level, std::int32_t replica,
                                  std::int64_t sample) {
    auto lane = [&](rng::Purpose p) {
        return rng::stream(rng::StreamKey{seed, level, replica, sample, p});
    };
    SampleStreams s{
        lane(rng::Purpose::spacing),   lane(rng::Purpose::sup_factor),
        lane(rng::Purpose::inf_factor), lane(rng::Purpose::coin),
        lane(rng::Purpose::normal),    lane(rng::Purpose::bridge),
        lane(rng::Purpose::direct_coarse),
    };
    return s;
}

WalkState simulate_gamma_horizon(const factors::FactorSampler& fs, int n, double t,
                                 SampleStreams& streams) {
    if (n < 1 || t <= 0.0) throw config_error("simulate_gamma_horizon: need n >= 1, t > 0");
    const double rate = n / t;
    if (std::fabs(fs.q() - rate) > 1e-9 * rate)
        throw config_error("simulate_gamma_horizon: factor provider q != n/t");
    WalkState st;
    for (int k = 0; k < n; ++k) {
        const double dt = rng::exponential(streams.spacing, rate);
        const double s = fs.sample_sup(streams.sup);
        const double i = fs.sample_inf(streams.inf);
        step(st, s, i, dt);
    }
    return st;
}

BmSlice sample_bm_slice(const models::BrownianMotion& bm, double s, rng::UniformStream& normal,
                        rng::UniformStream& bridge) {
    const double sd = bm.sigma * std::sqrt(s);
    const double x = bm.mu * s + sd * rng::standard_normal(normal);
    const double u = bridge.next();
    const double m = 0.5 * (x + std::sqrt(x * x - 2.0 * sd * sd * std::log(u)));
    BmSlice sl;
    sl.x = x;
    sl.m = m;
    return sl;
}

WalkState simulate_t_horizon_bm(const models::BrownianMotion& bm, int n, double t,
                                SampleStreams& streams) {
    if (n < 1 || t <= 0.0) throw config_error("simulate_t_horizon_bm: need n >= 1, t > 0");
    const double rate = n / t;
    WalkState st;
    for (;;) {
        const double dt = rng::exponential(streams.spacing, rate);
        const BmSlice sl = sample_bm_slice(bm, dt, streams.normal, streams.bridge);
        step(st, sl.m, sl.x - sl.m, dt);
        if (st.elapsed > t) break;
    }
    return st;
}

} // namespace whmc::walk
