#pragma once

#include <cmath>
#include <cstdint>

#include "mvpg/core.hpp"

namespace mvpg {

// Constants of the finite-sample bound on E|grad f(x_z)|^2 for the randomly
// selected output under constant stepsizes.
struct BoundInputs {
    double lipschitz = 1.0;    // L
    double grad_bound = 0.0;   // G
    double sigma = 0.0;        // variance bound
    double bias_const = 0.0;   // A, with |E[Delta | past]| <= A * beta_max
    double beta_max = 0.1;
    double beta_min = 0.1;
    std::uint64_t episodes = 1;  // N
    double f_gap = 0.0;        // f* - f(x_1)
    int blocks = 2;

    void validate() const {
        if (!(lipschitz > 0.0)) throw ConfigError("bound: L must be positive");
        if (!(grad_bound >= 0.0) || !(sigma >= 0.0) || !(bias_const >= 0.0) || !(f_gap >= 0.0))
            throw ConfigError("bound: G, sigma, A and f_gap must be nonnegative");
        if (!(beta_min > 0.0) || !(beta_max >= beta_min)) throw ConfigError("bound: need 0 < beta_min <= beta_max");
        if (episodes < 1) throw ConfigError("bound: N must be positive");
        if (blocks < 1) throw ConfigError("bound: block count must be positive");
        if (!(2.0 * beta_min > lipschitz * beta_max * beta_max))
            throw StepsizeConditionError("bound: stepsizes violate 2*beta_min > L*beta_max^2");
    }
};

// Per-iteration constant of the two-block (y, theta) case.
inline double two_block_constant(const BoundInputs& b) {
    const double L = b.lipschitz, G2 = b.grad_bound * b.grad_bound, s2 = b.sigma * b.sigma, bm = b.beta_max;
    return (1.0 - 0.5 * L * bm) * (L * L * bm * (G2 + s2) + L * (2.0 * G2 + s2)) + b.bias_const * b.grad_bound +
           L * s2 + 2.0 * L * (1.0 + L * bm) * (3.0 * s2 + 2.0 * G2);
}

// Per-iteration constant of the general b-block stochastic gradient method.
inline double block_constant(const BoundInputs& b) {
    const double L = b.lipschitz, G2 = b.grad_bound * b.grad_bound, s2 = b.sigma * b.sigma;
    double inner = 0.0;
    for (int i = 1; i <= b.blocks; ++i) inner += L * std::sqrt(static_cast<double>(i - 1) * (G2 + s2));
    return (1.0 - 0.5 * L * b.beta_max) * inner + b.blocks * (b.bias_const * b.grad_bound + 0.5 * L * s2);
}

inline double finite_sample_bound(const BoundInputs& b) {
    b.validate();
    const double n = static_cast<double>(b.episodes);
    const double c = b.blocks == 2 ? two_block_constant(b) : block_constant(b);
    const double denom = n * (b.beta_min - 0.5 * b.lipschitz * b.beta_max * b.beta_max);
    return (b.f_gap + n * b.beta_max * b.beta_max * c) / denom;
}

}  // namespace mvpg
