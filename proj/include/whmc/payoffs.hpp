#pragma once

#include <algorithm>
#include <cmath>

#include "whmc/errors.hpp"

// Payoff functionals F(V, J) of the walk's terminal value and running max.
// The barrier contract is the headline use case: a knock-in put on the
// exponentiated path. The Lipschitz family feeds the rate diagnostics.

namespace whmc::payoffs {

struct BarrierSpec {
    double strike = 1.0;
    double barrier = 0.2; // log-level the running max must exceed (strictly)
    double x0 = 0.0;      // starting log-price
};

inline double barrier_put_knock_in(const BarrierSpec& b, double v, double j) {
    if (!(b.x0 + j > b.barrier)) return 0.0;
    const double intrinsic = b.strike - std::exp(b.x0 + v);
    return intrinsic > 0.0 ? intrinsic : 0.0;
}

enum class LipschitzKind {
    terminal,     // F = V
    running_max,  // F = J
    abs_plus_max, // F = |V| + J
    capped_max,   // F = min(J, cap)
};

class Payoff {
  public:
    static Payoff barrier(const BarrierSpec& spec) {
        Payoff p;
        p.is_barrier_ = true;
        p.spec_ = spec;
        return p;
    }

    static Payoff lipschitz(LipschitzKind kind, double cap = 1.0) {
        if (kind == LipschitzKind::capped_max && !(cap > 0.0))
            throw config_error("Payoff: capped_max needs cap > 0");
        Payoff p;
        p.kind_ = kind;
        p.cap_ = cap;
        return p;
    }

    double operator()(double v, double j) const {
        if (is_barrier_) return barrier_put_knock_in(spec_, v, j);
        switch (kind_) {
            case LipschitzKind::terminal: return v;
            case LipschitzKind::running_max: return j;
            case LipschitzKind::abs_plus_max: return std::fabs(v) + j;
            case LipschitzKind::capped_max: return std::min(j, cap_);
        }
        return 0.0;
    }

    bool is_barrier() const { return is_barrier_; }
    const BarrierSpec& barrier_spec() const { return spec_; }

  private:
    Payoff() = default;
    bool is_barrier_ = false;
    BarrierSpec spec_{};
    LipschitzKind kind_ = LipschitzKind::terminal;
    double cap_ = 1.0;
};

} // namespace whmc::payoffs
