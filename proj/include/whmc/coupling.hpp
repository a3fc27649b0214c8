#pragma once

#include <cstdint>
#include <vector>

#include "whmc/factors.hpp"
#include "whmc/models.hpp"
#include "whmc/walk.hpp"

// Coupled fine/coarse walk pairs for multilevel differences. A fine grid of
// 2*n_coarse exponential slices is thinned with fair coins; surviving points
// end coarse bundles. Within a bundle the coarse sup is the best partial
// climb (prefix sums plus the next sup) and the coarse inf is whatever
// remains of the bundle's total move, which reproduces the coarse-rate
// factor law exactly while sharing all randomness with the fine walk.

namespace whmc::coupling {

enum class Completion {
    extend_fine,   // keep drawing fine-rate pairs until enough bundles close
    direct_coarse, // draw the missing coarse factors at the coarse rate
};

struct GridPoint {
    double spacing = 0.0;
    double sup = 0.0; // >= 0
    double inf = 0.0; // <= 0
};

// Fair-coin thinning: returns the 0-based indices that survive.
std::vector<std::int32_t> thin_indices(int count, rng::UniformStream& coin);

// Merge fine points into n_bundles coarse triples; ends[m] is the 0-based
// index of the last fine point consumed by bundle m (bundle m covers
// (ends[m-1], ends[m]]).
std::vector<GridPoint> coarsen_factors(const std::vector<GridPoint>& fine,
                                       const std::vector<std::int32_t>& ends, int n_bundles);

struct CoupledDraw {
    walk::WalkState fine;
    walk::WalkState coarse;
    double cost_units = 0.0; // factor-pair draws (fine grid + completion)
    int completion_draws = 0;
};

// One coupled sample at gamma-like horizons. fine_fs must carry
// q = 2*n_coarse/t; coarse_fs is consulted only under direct_coarse
// completion and must carry q = n_coarse/t (pass null otherwise).
CoupledDraw coupled_gamma_sample(const factors::FactorSampler& fine_fs,
                                 const factors::FactorSampler* coarse_fs, int n_coarse, double t,
                                 walk::SampleStreams& streams,
                                 Completion completion = Completion::extend_fine);

// One coupled sample at the deterministic horizon (Brownian motion only).
// With probability 1/2 the coarse walk equals the fine one; otherwise it
// appends a single coarse-rate slice.
CoupledDraw coupled_t_sample_bm(const models::BrownianMotion& bm, int n_coarse, double t,
                                walk::SampleStreams& streams);

} // namespace whmc::coupling
