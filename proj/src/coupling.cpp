#include "whmc/coupling.hpp"

#include <cmath>

#include "whmc/errors.hpp"

namespace whmc::coupling {

std::vector<std::int32_t> thin_indices(int count, rng::UniformStream& coin) {
    std::vector<std::int32_t> kept;
    kept.reserve(count / 2 + 8);
    for (int i = 0; i < count; ++i)
        if (coin.coin()) kept.push_back(i);
    return kept;
}

std::vector<GridPoint> coarsen_factors(const std::vector<GridPoint>& fine,
                                       const std::vector<std::int32_t>& ends, int n_bundles) {
    if (static_cast<int>(ends.size()) < n_bundles)
        throw config_error("coarsen_factors: fewer bundle ends than bundles");
    std::vector<GridPoint> coarse(n_bundles);
    std::int32_t begin = 0;
    for (int m = 0; m < n_bundles; ++m) {
        const std::int32_t end = ends[m];
        if (end < begin || end >= static_cast<std::int32_t>(fine.size()))
            throw config_error("coarsen_factors: bundle end out of range");
        double prefix = 0.0; // sum of (sup+inf) strictly before the current point
        double best = 0.0;
        double dt = 0.0;
        for (std::int32_t k = begin; k <= end; ++k) {
            const GridPoint& g = fine[k];
            const double climb = prefix + g.sup;
            if (k == begin || climb > best) best = climb;
            prefix += g.sup + g.inf;
            dt += g.spacing;
        }
        coarse[m].sup = best;          // >= 0 since the first climb is sup >= 0
        coarse[m].inf = prefix - best; // total minus max of partials, <= 0
        coarse[m].spacing = dt;
        begin = end + 1;
    }
    return coarse;
}

CoupledDraw coupled_gamma_sample(const factors::FactorSampler& fine_fs,
                                 const factors::FactorSampler* coarse_fs, int n_coarse, double t,
                                 walk::SampleStreams& streams, Completion completion) {
    if (n_coarse < 1 || t <= 0.0)
        throw config_error("coupled_gamma_sample: need n_coarse >= 1, t > 0");
    const int n_fine = 2 * n_coarse;
    const double fine_rate = n_fine / t;
    if (std::fabs(fine_fs.q() - fine_rate) > 1e-9 * fine_rate)
        throw config_error("coupled_gamma_sample: fine provider q != 2*n_coarse/t");
    if (completion == Completion::direct_coarse) {
        if (coarse_fs == nullptr)
            throw config_error("coupled_gamma_sample: direct completion needs a coarse provider");
        const double coarse_rate = n_coarse / t;
        if (std::fabs(coarse_fs->q() - coarse_rate) > 1e-9 * coarse_rate)
            throw config_error("coupled_gamma_sample: coarse provider q != n_coarse/t");
    }

    CoupledDraw out;
    const double coarse_rate = n_coarse / t;
    std::vector<GridPoint> pts(n_fine);
    for (int i = 0; i < n_fine; ++i) {
        pts[i].spacing = rng::exponential(streams.spacing, fine_rate);
        pts[i].sup = fine_fs.sample_sup(streams.sup);
        pts[i].inf = fine_fs.sample_inf(streams.inf);
        walk::step(out.fine, pts[i].sup, pts[i].inf, pts[i].spacing);
    }
    out.cost_units = n_fine;

    std::vector<std::int32_t> ends = thin_indices(n_fine, streams.coin);

    int direct_tail = 0;
    if (static_cast<int>(ends.size()) < n_coarse) {
        if (completion == Completion::extend_fine) {
            // Keep the fine-rate grid going (without touching the fine walk)
            // until enough bundles close.
            while (static_cast<int>(ends.size()) < n_coarse) {
                GridPoint g;
                g.spacing = rng::exponential(streams.spacing, fine_rate);
                g.sup = fine_fs.sample_sup(streams.sup);
                g.inf = fine_fs.sample_inf(streams.inf);
                pts.push_back(g);
                out.cost_units += 1.0;
                out.completion_draws += 1;
                if (streams.coin.coin())
                    ends.push_back(static_cast<std::int32_t>(pts.size()) - 1);
            }
        } else {
            // The trailing bundle is still open when the final fine slice is
            // not an end point. By loss of memory its unseen remainder is one
            // fresh coarse-rate factor triple, spliced onto the partial climb
            // through the usual bundle recursion; wholly missing bundles are
            // drawn fresh below.
            if (ends.empty() || ends.back() != n_fine - 1) {
                GridPoint g;
                g.spacing = rng::exponential(streams.direct_coarse, coarse_rate);
                g.sup = coarse_fs->sample_sup(streams.direct_coarse);
                g.inf = coarse_fs->sample_inf(streams.direct_coarse);
                pts.push_back(g);
                ends.push_back(static_cast<std::int32_t>(pts.size()) - 1);
                out.cost_units += 1.0;
                out.completion_draws += 1;
            }
            direct_tail = n_coarse - static_cast<int>(ends.size());
        }
    }

    const int bundled = n_coarse - direct_tail;
    std::vector<GridPoint> coarse = coarsen_factors(pts, ends, bundled);
    for (const GridPoint& g : coarse) walk::step(out.coarse, g.sup, g.inf, g.spacing);

    for (int m = 0; m < direct_tail; ++m) {
        const double dt = rng::exponential(streams.direct_coarse, coarse_rate);
        const double s = coarse_fs->sample_sup(streams.direct_coarse);
        const double i = coarse_fs->sample_inf(streams.direct_coarse);
        walk::step(out.coarse, s, i, dt);
        out.cost_units += 1.0;
        out.completion_draws += 1;
    }
    return out;
}

CoupledDraw coupled_t_sample_bm(const models::BrownianMotion& bm, int n_coarse, double t,
                                walk::SampleStreams& streams) {
    if (n_coarse < 1 || t <= 0.0)
        throw config_error("coupled_t_sample_bm: need n_coarse >= 1, t > 0");
    CoupledDraw out;
    out.fine = walk::simulate_t_horizon_bm(bm, 2 * n_coarse, t, streams);
    out.cost_units = static_cast<double>(out.fine.steps);
    out.coarse = out.fine;
    // The fine stopping slice ends a coarse slice with probability 1/2;
    // otherwise the coarse clock still owes an Exp(n_coarse/t) remainder.
    if (!streams.coin.coin()) {
        const double dt = rng::exponential(streams.spacing, n_coarse / t);
        const walk::BmSlice sl = walk::sample_bm_slice(bm, dt, streams.normal, streams.bridge);
        walk::step(out.coarse, sl.m, sl.x - sl.m, dt);
        out.cost_units += 1.0;
        out.completion_draws = 1;
    }
    return out;
}

} // namespace whmc::coupling
