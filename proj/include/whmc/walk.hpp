#pragma once

#include <cstdint>

#include "whmc/factors.hpp"
#include "whmc/models.hpp"
#include "whmc/rng.hpp"

// Random-walk drivers. Each step advances by an independent (sup, inf)
// factor pair over one exponential time slice; the running maximum J picks
// up the partial sup before the inf drag. After n steps at rate n/t the
// elapsed clock is Gamma(n, n/t), centred on t.

namespace whmc::walk {

struct WalkState {
    double v = 0.0;       // terminal position
    double j = 0.0;       // running maximum
    double elapsed = 0.0; // simulated clock
    std::int64_t steps = 0;
};

// One pair step: s_up >= 0 is the sup increment, s_down <= 0 the inf one.
inline void step(WalkState& st, double s_up, double s_down, double dt) {
    const double cand = st.v + s_up;
    if (cand > st.j) st.j = cand;
    st.v = cand + s_down;
    st.elapsed += dt;
    ++st.steps;
}

// Per-sample stream bundle; one lane per draw purpose keeps coupled and
// plain runs replayable independently of consumption order.
struct SampleStreams {
    rng::UniformStream spacing;
    rng::UniformStream sup;
    rng::UniformStream inf;
    rng::UniformStream coin;
    rng::UniformStream normal;
    rng::UniformStream bridge;
    rng::UniformStream direct_coarse;
};

SampleStreams make_sample_streams(std::uint64_t seed, std::int32_t level, std::int32_t replica,
                                  std::int64_t sample);

// n factor-pair steps with explicit Exp(n/t) spacings; elapsed ~ Gamma(n, n/t).
WalkState simulate_gamma_horizon(const factors::FactorSampler& fs, int n, double t,
                                 SampleStreams& streams);

// Deterministic-horizon walk for Brownian motion: step while the clock is
// below t, drawing exact (increment, running max) pairs over Exp(n/t)
// slices. Overshoots t by one slice; the overshoot is Exp(n/t) by loss of
// memory. Number of steps is 1 + Poisson(n) in distribution.
WalkState simulate_t_horizon_bm(const models::BrownianMotion& bm, int n, double t,
                                SampleStreams& streams);

// Exact draw of (X_s, max X over [0,s]) for Brownian motion with drift via
// the reflection bridge inverse transform.
struct BmSlice {
    double x = 0.0; // increment over the slice
    double m = 0.0; // running max within the slice, m >= max(0, x)
};

BmSlice sample_bm_slice(const models::BrownianMotion& bm, double s, rng::UniformStream& normal,
                        rng::UniformStream& bridge);

} // namespace whmc::walk
