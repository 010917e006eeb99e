#pragma once

#include <cmath>
#include <cstdint>
#include <functional>

#include "mvpg/environment.hpp"
#include "mvpg/objective.hpp"

namespace mvpg {

// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v))
            comp_ += (sum_ - t) + v;
        else
            comp_ += (v - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

class CompensatedVector {
public:
    explicit CompensatedVector(std::size_t n = 0) : parts_(n) {}
    void add(double scale, const Vector& v) {
        for (std::size_t i = 0; i < parts_.size(); ++i) parts_[i].add(scale * v[i]);
    }
    Vector value() const {
        Vector out(parts_.size());
        for (std::size_t i = 0; i < parts_.size(); ++i) out[i] = parts_[i].value();
        return out;
    }

private:
    std::vector<CompensatedSum> parts_;
};

struct EnumerationOptions {
    std::uint64_t max_trajectories = 1'000'000;
    // Branches whose probability falls below this are dropped. Zero keeps everything.
    double prune_below = 0.0;
};

// A complete trajectory as seen by the enumerator.
struct TrajectoryView {
    double probability;
    double ret;
    const Vector& omega;
    int length;
};

// Depth-first walk over every trajectory of an enumerable environment under
// pi_theta. Returns the number of trajectories visited.
template <EnumerableEnvironment E>
std::uint64_t enumerate_trajectories(const E& env, const GibbsPolicy<typename E::State>& policy,
                                     const Vector& theta, const std::function<void(const TrajectoryView&)>& visit,
                                     const EnumerationOptions& opts = {}) {
    using State = typename E::State;
    std::uint64_t count = 0;
    const int cap = env.horizon();

    std::function<void(const State&, double, double, Vector&, int)> walk =
        [&](const State& s, double prob, double ret, Vector& om, int depth) {
            const auto acts = policy.feasible_actions(s);
            const auto probs = policy.action_probabilities(theta, s);
            for (std::size_t i = 0; i < acts.size(); ++i) {
                const double pa = prob * probs[i];
                if (opts.prune_below > 0.0 && pa < opts.prune_below) continue;
                const Vector sc = policy.score(theta, s, acts[i]);
                axpy(1.0, sc, om);
                for (const auto& o : env.outcomes(s, acts[i])) {
                    const double p = pa * o.probability;
                    if (opts.prune_below > 0.0 && p < opts.prune_below) continue;
                    const double r = ret + o.reward;
                    if (o.terminal || depth + 1 >= cap) {
                        if (++count > opts.max_trajectories)
                            throw EnumerationLimitError("trajectory enumeration exceeded " +
                                                        std::to_string(opts.max_trajectories));
                        visit(TrajectoryView{p, r, om, depth + 1});
                    } else {
                        walk(o.next, p, r, om, depth + 1);
                    }
                }
                axpy(-1.0, sc, om);
            }
        };

    for (const auto& init : env.initial_distribution()) {
        Vector om(policy.dimension(), 0.0);
        walk(init.state, init.probability, 0.0, om, 0);
    }
    return count;
}

struct ExactExpectation {
    double total_probability = 0.0;
    std::uint64_t trajectories = 0;
};

// Exact E[h(R, omega)] for a vector-valued functional h.
template <EnumerableEnvironment E>
Vector exact_expectation(const E& env, const GibbsPolicy<typename E::State>& policy, const Vector& theta,
                         std::size_t out_dim, const std::function<Vector(double, const Vector&)>& h,
                         ExactExpectation* info = nullptr, const EnumerationOptions& opts = {}) {
    CompensatedVector acc(out_dim);
    CompensatedSum mass;
    const auto n = enumerate_trajectories(
        env, policy, theta,
        [&](const TrajectoryView& tv) {
            acc.add(tv.probability, h(tv.ret, tv.omega));
            mass.add(tv.probability);
        },
        opts);
    if (info) *info = {mass.value(), n};
    return acc.value();
}

// J, M and their likelihood-ratio gradients by exhaustive enumeration.
template <EnumerableEnvironment E>
ReturnMoments exact_moments(const E& env, const GibbsPolicy<typename E::State>& policy, const Vector& theta,
                            ExactExpectation* info = nullptr, const EnumerationOptions& opts = {}) {
    const std::size_t d = policy.dimension();
    CompensatedSum j, m, mass;
    CompensatedVector gj(d), gm(d);
    const auto n = enumerate_trajectories(
        env, policy, theta,
        [&](const TrajectoryView& tv) {
            mass.add(tv.probability);
            j.add(tv.probability * tv.ret);
            m.add(tv.probability * tv.ret * tv.ret);
            gj.add(tv.probability * tv.ret, tv.omega);
            gm.add(tv.probability * tv.ret * tv.ret, tv.omega);
        },
        opts);
    if (info) *info = {mass.value(), n};
    return {j.value(), m.value(), gj.value(), gm.value()};
}

// grad J - lambda (grad M - 2 J grad J), including the double-sampling term.
inline Vector exact_true_gradient(const ReturnMoments& mom, double lambda) {
    Vector g(mom.grad_j.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = mom.grad_j[i] - lambda * (mom.grad_m[i] - 2.0 * mom.j * mom.grad_j[i]);
    return g;
}

inline Vector finite_difference(const std::function<double(const Vector&)>& fn, const Vector& theta,
                                double step = 1e-5) {
    if (!(step > 0.0)) throw Error("finite-difference step must be positive");
    Vector g(theta.size());
    Vector x = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        x[i] = theta[i] + step;
        const double hi = fn(x);
        x[i] = theta[i] - step;
        const double lo = fn(x);
        x[i] = theta[i];
        g[i] = (hi - lo) / (2.0 * step);
    }
    return g;
}

// Single-sample approximation error of the two block estimators.
struct GradientError {
    double delta_y = 0.0;
    Vector delta_theta;
    Vector conditional_bias_theta;
};

struct EstimatorBiasReport {
    std::uint64_t samples = 0;
    double exact_y = 0.0;
    Vector exact_theta;
    // Monte Carlo mean of the error; its theta part is the conditional bias estimate.
    GradientError mean_error;
    double stderr_y = 0.0;
    Vector stderr_theta;
    // Empirical E|Delta|^2, the sigma^2 of the variance assumption.
    double second_moment_y = 0.0;
    double second_moment_theta = 0.0;
};

// Compares Monte Carlo means of the dual and policy block estimators (both
// evaluated at the given y) against the exact block gradients.
template <EnumerableEnvironment E>
EstimatorBiasReport estimator_bias_report(const E& env, const GibbsPolicy<typename E::State>& policy,
                                          const Vector& theta, double y, double lambda, std::uint64_t samples,
                                          RngStream& env_rng, RngStream& policy_rng,
                                          const EnumerationOptions& opts = {}) {
    if (samples < 2) throw InsufficientDataError("bias report needs at least two samples");
    const auto mom = exact_moments(env, policy, theta, nullptr, opts);
    const std::size_t d = policy.dimension();
    EstimatorBiasReport rep;
    rep.samples = samples;
    rep.exact_y = 2.0 * mom.j + 1.0 / lambda - 2.0 * y;
    rep.exact_theta.resize(d);
    for (std::size_t i = 0; i < d; ++i) rep.exact_theta[i] = 2.0 * y * mom.grad_j[i] - mom.grad_m[i];

    double sy = 0.0, sy2 = 0.0, sq_theta = 0.0;
    Vector st(d, 0.0), st2(d, 0.0);
    for (std::uint64_t n = 0; n < samples; ++n) {
        const auto trace = rollout(env, policy, theta, env_rng, policy_rng);
        const double ret = trace.return_total();
        const double dy = sample_dual_gradient(ret, y, lambda) - rep.exact_y;
        const Vector gt = sample_policy_gradient(ret, y, omega(trace));
        sy += dy;
        sy2 += dy * dy;
        double norm2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double e = gt[i] - rep.exact_theta[i];
            st[i] += e;
            st2[i] += e * e;
            norm2 += e * e;
        }
        sq_theta += norm2;
    }
    const double ns = static_cast<double>(samples);
    auto stderr_of = [ns](double s, double s2) {
        const double mean = s / ns;
        const double var = std::max(0.0, (s2 - ns * mean * mean) / (ns - 1.0));
        return std::sqrt(var / ns);
    };
    rep.mean_error.delta_y = sy / ns;
    rep.stderr_y = stderr_of(sy, sy2);
    rep.second_moment_y = sy2 / ns;
    rep.mean_error.delta_theta.resize(d);
    rep.stderr_theta.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        rep.mean_error.delta_theta[i] = st[i] / ns;
        rep.stderr_theta[i] = stderr_of(st[i], st2[i]);
    }
    rep.mean_error.conditional_bias_theta = rep.mean_error.delta_theta;
    rep.second_moment_theta = sq_theta / ns;
    return rep;
}

}  // namespace mvpg
