#pragma once

#include "mvpg/core.hpp"

// Mean-variance objective and its Fenchel-dual reformulation.
//
//   J_lambda(theta) = J - lambda (M - J^2 - zeta)
//   F_lambda(theta) = (J + 1/(2 lambda))^2 - M = J_lambda / lambda + 1/(4 lambda^2) - zeta
//
// Writing the square through z^2 = max_y (2 z y - y^2) turns max F_lambda into the
// two-block problem max_{theta, y} f(theta, y) with
//
//   f(theta, y) = 2 y (J + 1/(2 lambda)) - y^2 - M,
//
// whose block gradients admit single-trajectory unbiased estimates. The plain
// gradient of J_lambda contains J * grad J, which would need two independent
// trajectories; it is only ever computed exactly (see oracle.hpp).

namespace mvpg {

struct ReturnMoments {
    double j = 0.0;
    double m = 0.0;
    Vector grad_j;
    Vector grad_m;

    double variance() const { return m - j * j; }
};

inline double mean_variance_objective(const ReturnMoments& mom, double lambda, double zeta) {
    return mom.j - lambda * (mom.m - mom.j * mom.j - zeta);
}

inline double mean_variance_objective(const ReturnMoments& mom, const RiskConfig& cfg) {
    return mean_variance_objective(mom, cfg.lambda, cfg.zeta);
}

inline double f_lambda(const ReturnMoments& mom, double lambda) {
    const double z = mom.j + 0.5 / lambda;
    return z * z - mom.m;
}

inline double fenchel_dual_value(double z, double y) { return 2.0 * z * y - y * y; }

inline double surrogate_value(const ReturnMoments& mom, double y, double lambda) {
    return 2.0 * y * (mom.j + 0.5 / lambda) - y * y - mom.m;
}

inline double optimal_dual(const ReturnMoments& mom, double lambda) { return mom.j + 0.5 / lambda; }

// Single-trajectory estimate of d f / d y.
inline double sample_dual_gradient(double ret, double y, double lambda) { return 2.0 * ret + 1.0 / lambda - 2.0 * y; }

// Single-trajectory estimate of d f / d theta. The caller chooses which y
// enters: the freshly updated one (cyclic) or the pre-step one (joint/randomized).
inline Vector sample_policy_gradient(double ret, double y_used, const Vector& omega_t) {
    const double scale = 2.0 * y_used * ret - ret * ret;
    Vector g(omega_t.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * omega_t[i];
    return g;
}

}  // namespace mvpg
