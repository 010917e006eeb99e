#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "mvpg/core.hpp"
#include "mvpg/environment.hpp"
#include "mvpg/metrics.hpp"
#include "mvpg/objective.hpp"
#include "mvpg/random.hpp"

namespace mvpg {

struct OptimizerState {
    Iterate iterate;
    // Index of the next episode to process (1-based).
    std::uint64_t t = 1;
    // Running return moments of the two-time-scale baseline.
    double j_hat = 0.0;
    double m_hat = 0.0;
};

enum class Block { Dual, Policy };

// Observes block updates in the order they are applied, with the y value the
// update consumed.
using UpdateRecorder = std::function<void(Block, double y_used)>;

namespace detail {

inline void require_finite(const OptimizerState& s, std::uint64_t episode) {
    if (!s.iterate.finite()) throw DivergenceError(episode, "iterate has non-finite entries");
    if (!std::isfinite(s.j_hat) || !std::isfinite(s.m_hat))
        throw DivergenceError(episode, "moment estimates are non-finite");
}

inline void check_dimension(const OptimizerState& s, const EpisodeTrace& trace) {
    if (trace.dimension() != s.iterate.theta.size())
        throw Error("episode scores do not match the policy dimension");
}

inline void notify(const UpdateRecorder& rec, Block b, double y) {
    if (rec) rec(b, y);
}

}  // namespace detail

// Cyclic block ascent: y first, then theta with the fresh y.
inline OptimizerState mvp_step(const OptimizerState& state, const EpisodeTrace& trace, const RiskConfig& cfg,
                               const UpdateRecorder& recorder = {}) {
    detail::check_dimension(state, trace);
    OptimizerState next = state;
    const double ret = trace.return_total();
    const double beta_y = cfg.y_schedule.at(state.t);
    const double beta_theta = cfg.theta_schedule.at(state.t);

    detail::notify(recorder, Block::Dual, state.iterate.y);
    next.iterate.y = state.iterate.y + beta_y * sample_dual_gradient(ret, state.iterate.y, cfg.lambda);

    detail::notify(recorder, Block::Policy, next.iterate.y);
    axpy(beta_theta, sample_policy_gradient(ret, next.iterate.y, omega(trace)), next.iterate.theta);

    next.t = state.t + 1;
    detail::require_finite(next, state.t);
    return next;
}

// Randomized block ascent: one block per episode, chosen by a uniform draw
// (draw < 0.5 selects the dual block). The policy update uses the pre-step y.
inline OptimizerState rcpg_step(const OptimizerState& state, const EpisodeTrace& trace, const RiskConfig& cfg,
                                double block_draw, const UpdateRecorder& recorder = {}) {
    detail::check_dimension(state, trace);
    OptimizerState next = state;
    const double ret = trace.return_total();
    if (block_draw < 0.5) {
        detail::notify(recorder, Block::Dual, state.iterate.y);
        next.iterate.y = state.iterate.y + cfg.y_schedule.at(state.t) *
                                               sample_dual_gradient(ret, state.iterate.y, cfg.lambda);
    } else {
        detail::notify(recorder, Block::Policy, state.iterate.y);
        axpy(cfg.theta_schedule.at(state.t), sample_policy_gradient(ret, state.iterate.y, omega(trace)),
             next.iterate.theta);
    }
    next.t = state.t + 1;
    detail::require_finite(next, state.t);
    return next;
}

// Joint stochastic gradient ascent: both blocks from the pre-step iterate.
inline OptimizerState sga_step(const OptimizerState& state, const EpisodeTrace& trace, const RiskConfig& cfg,
                               const UpdateRecorder& recorder = {}) {
    detail::check_dimension(state, trace);
    OptimizerState next = state;
    const double ret = trace.return_total();
    detail::notify(recorder, Block::Dual, state.iterate.y);
    next.iterate.y =
        state.iterate.y + cfg.y_schedule.at(state.t) * sample_dual_gradient(ret, state.iterate.y, cfg.lambda);
    detail::notify(recorder, Block::Policy, state.iterate.y);
    axpy(cfg.theta_schedule.at(state.t), sample_policy_gradient(ret, state.iterate.y, omega(trace)),
         next.iterate.theta);
    next.t = state.t + 1;
    detail::require_finite(next, state.t);
    return next;
}

// REINFORCE: theta += beta * R * omega.
inline OptimizerState vanilla_pg_step(const OptimizerState& state, const EpisodeTrace& trace, double beta) {
    detail::check_dimension(state, trace);
    OptimizerState next = state;
    axpy(beta * trace.return_total(), omega(trace), next.iterate.theta);
    next.t = state.t + 1;
    detail::require_finite(next, state.t);
    return next;
}

// Two-time-scale mean-variance baseline: running J and M estimates on the fast
// scale, then a likelihood-ratio step on J - lambda (M - J^2) with J_hat
// standing in for the second, independent copy of J.
inline OptimizerState tamar_step(const OptimizerState& state, const EpisodeTrace& trace, double fast_beta,
                                 double slow_beta, double lambda) {
    detail::check_dimension(state, trace);
    OptimizerState next = state;
    const double ret = trace.return_total();
    next.j_hat = state.j_hat + fast_beta * (ret - state.j_hat);
    next.m_hat = state.m_hat + fast_beta * (ret * ret - state.m_hat);
    const double scale = ret - lambda * (ret * ret - 2.0 * next.j_hat * ret);
    axpy(slow_beta * scale, omega(trace), next.iterate.theta);
    next.t = state.t + 1;
    detail::require_finite(next, state.t);
    return next;
}

// Fast and slow schedules of the baseline; the fast one must decay strictly slower.
struct TwoTimescaleSchedules {
    StepsizeSchedule fast = StepsizeSchedule::power(0.1, 0.6);
    StepsizeSchedule slow = StepsizeSchedule::power(0.01, 0.9);

    void validate() const {
        const auto* f = std::get_if<StepsizeSchedule::Power>(&fast.kind());
        const auto* s = std::get_if<StepsizeSchedule::Power>(&slow.kind());
        if (!f || !s) throw ConfigError("two-time-scale schedules must both be power schedules");
        if (!(f->exponent < s->exponent))
            throw ConfigError("fast schedule exponent must be smaller than the slow schedule exponent");
    }
};

enum class Algorithm { Mvp, Rcpg, Sga, Pg, Tamar };

inline std::string_view algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::Mvp: return "mvp";
        case Algorithm::Rcpg: return "rcpg";
        case Algorithm::Sga: return "sga";
        case Algorithm::Pg: return "pg";
        case Algorithm::Tamar: return "tamar";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
    for (auto a : {Algorithm::Mvp, Algorithm::Rcpg, Algorithm::Sga, Algorithm::Pg, Algorithm::Tamar})
        if (algorithm_name(a) == name) return a;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

// Sequence of iterates x_1..x_N, where x_t is the iterate after episode t.
// y is kept for every episode; theta every `theta_stride` episodes (and always
// for the last one).
class IterateHistory {
public:
    IterateHistory() = default;
    IterateHistory(std::uint64_t expected, std::uint64_t theta_stride)
        : stride_(std::max<std::uint64_t>(1, theta_stride)) {
        y_.reserve(expected);
    }

    void push(const Iterate& x) {
        y_.push_back(x.y);
        const auto t = static_cast<std::uint64_t>(y_.size());
        if ((t - 1) % stride_ == 0) {
            theta_.push_back(x.theta);
            theta_index_.push_back(t);
        }
        last_ = x;
    }

    std::uint64_t size() const noexcept { return y_.size(); }
    std::uint64_t theta_stride() const noexcept { return stride_; }
    const std::vector<double>& y() const noexcept { return y_; }
    const Iterate& last() const { return last_; }

    bool has_theta(std::uint64_t t) const { return t == size() || (t - 1) % stride_ == 0; }

    // Iterate x_t, 1-based.
    Iterate at(std::uint64_t t) const {
        if (t < 1 || t > size()) throw Error("history index out of range");
        if (t == size()) return last_;
        if (!has_theta(t)) throw Error("theta snapshot for episode " + std::to_string(t) + " was thinned away");
        return {theta_[(t - 1) / stride_], y_[t - 1]};
    }

    // Kept snapshots as (episode, iterate).
    std::vector<std::pair<std::uint64_t, Iterate>> snapshots() const {
        std::vector<std::pair<std::uint64_t, Iterate>> out;
        for (std::size_t i = 0; i < theta_.size(); ++i)
            out.push_back({theta_index_[i], Iterate{theta_[i], y_[theta_index_[i] - 1]}});
        if (out.empty() || out.back().first != size()) out.push_back({size(), last_});
        return out;
    }

private:
    std::uint64_t stride_ = 1;
    std::vector<double> y_;
    std::vector<Vector> theta_;
    std::vector<std::uint64_t> theta_index_;
    Iterate last_;
};

// Selection probabilities of the output rules over t = 1..n.
inline std::vector<double> output_distribution(const OutputOption& option, const StepsizeSchedule& theta,
                                               const StepsizeSchedule& y, std::uint64_t n) {
    std::vector<double> w(n, 0.0);
    if (std::holds_alternative<LastIterate>(option)) {
        w.back() = 1.0;
        return w;
    }
    if (std::holds_alternative<UniformRandomIterate>(option)) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(n));
        return w;
    }
    const double lip = std::get<WeightedRandomIterate>(option).lipschitz;
    double total = 0.0;
    for (std::uint64_t t = 1; t <= n; ++t) {
        w[t - 1] = output_weight(theta, y, lip, t);
        if (!(w[t - 1] > 0.0))
            throw StepsizeConditionError("nonpositive output weight at t = " + std::to_string(t) +
                                         " (needs 2*beta_min > L*beta_max^2)");
        total += w[t - 1];
    }
    for (double& v : w) v /= total;
    return w;
}

struct SelectedIterate {
    std::uint64_t index = 0;  // 1-based
    Iterate iterate;
};

inline SelectedIterate select_output(const IterateHistory& history, const OutputOption& option,
                                     const StepsizeSchedule& theta, const StepsizeSchedule& y, RngStream& rng) {
    const std::uint64_t n = history.size();
    if (n == 0) throw Error("cannot select an output from an empty history");
    if (std::holds_alternative<LastIterate>(option)) return {n, history.at(n)};
    if (std::holds_alternative<UniformRandomIterate>(option)) {
        auto z = static_cast<std::uint64_t>(rng.uniform() * static_cast<double>(n)) + 1;
        z = std::min(z, n);
        return {z, history.at(z)};
    }
    const auto probs = output_distribution(option, theta, y, n);
    const double u = rng.uniform();
    double cum = 0.0;
    for (std::uint64_t t = 1; t <= n; ++t) {
        cum += probs[t - 1];
        if (u < cum) return {t, history.at(t)};
    }
    return {n, history.at(n)};
}

struct RunOptions {
    // 0 selects the default stride max(1, N / 10000).
    std::uint64_t snapshot_stride = 0;
    TwoTimescaleSchedules two_timescale;
    std::optional<Vector> initial_theta;
    double initial_y = 0.0;
};

struct TrainingResult {
    std::vector<double> returns;
    IterateHistory history;
    SelectedIterate output;
    OptimizerState final_state;
};

template <Environment E>
TrainingResult run(Algorithm algorithm, const E& env, const GibbsPolicy<typename E::State>& policy,
                   const RiskConfig& cfg, const RunOptions& opts = {}) {
    cfg.validate();
    if (algorithm == Algorithm::Tamar) opts.two_timescale.validate();
    const std::size_t d = policy.dimension();

    OptimizerState state;
    state.iterate.theta = opts.initial_theta.value_or(Vector(d, 0.0));
    if (state.iterate.theta.size() != d) throw ConfigError("initial theta has the wrong dimension");
    state.iterate.y = opts.initial_y;

    std::uint64_t stride = opts.snapshot_stride ? opts.snapshot_stride : std::max<std::uint64_t>(1, cfg.episodes / 10000);
    if (!std::holds_alternative<LastIterate>(cfg.output_option)) stride = 1;

    RngStream env_rng(cfg.seed, Stream::Environment);
    RngStream policy_rng(cfg.seed, Stream::Policy);
    RngStream block_rng(cfg.seed, Stream::BlockSelection);
    RngStream output_rng(cfg.seed, Stream::OutputSelection);

    TrainingResult res;
    res.returns.reserve(cfg.episodes);
    res.history = IterateHistory(cfg.episodes, stride);

    for (std::uint64_t t = 1; t <= cfg.episodes; ++t) {
        const auto trace = rollout(env, policy, state.iterate.theta, env_rng, policy_rng);
        res.returns.push_back(trace.return_total());
        switch (algorithm) {
            case Algorithm::Mvp: state = mvp_step(state, trace, cfg); break;
            case Algorithm::Rcpg: state = rcpg_step(state, trace, cfg, block_rng.uniform()); break;
            case Algorithm::Sga: state = sga_step(state, trace, cfg); break;
            case Algorithm::Pg: state = vanilla_pg_step(state, trace, cfg.theta_schedule.at(t)); break;
            case Algorithm::Tamar:
                state = tamar_step(state, trace, opts.two_timescale.fast.at(t), opts.two_timescale.slow.at(t),
                                   cfg.lambda);
                break;
        }
        res.history.push(state.iterate);
    }
    res.final_state = state;
    res.output = select_output(res.history, cfg.output_option, cfg.theta_schedule, cfg.y_schedule, output_rng);
    return res;
}

// Returns of `episodes` fresh episodes with theta held fixed.
template <Environment E>
std::vector<double> evaluate_policy(const E& env, const GibbsPolicy<typename E::State>& policy, const Vector& theta,
                                    std::uint64_t episodes, std::uint64_t seed) {
    RngStream env_rng(seed, Stream::Evaluation);
    RngStream policy_rng(splitmix64(seed), Stream::Evaluation);
    std::vector<double> out;
    out.reserve(episodes);
    for (std::uint64_t i = 0; i < episodes; ++i) out.push_back(rollout_return(env, policy, theta, env_rng, policy_rng));
    return out;
}

}  // namespace mvpg
