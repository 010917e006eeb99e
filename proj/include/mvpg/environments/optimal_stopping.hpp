#pragma once

#include <cmath>

#include "mvpg/environment.hpp"
#include "mvpg/environments/american_option.hpp"

namespace mvpg::env {

struct StoppingParams {
    double x0 = 1.25;
    double f_u = 2.0;
    double f_d = 0.5;
    double p = 0.65;
    int tau = 20;
    double p_h = 0.1;

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("stopping: p must lie in [0, 1]");
        if (!(x0 > 0.0 && f_u > 0.0 && f_d > 0.0)) throw ConfigError("stopping: prices and factors must be positive");
        if (!(p_h > 0.0)) throw ConfigError("stopping: p_h must be positive");
        if (tau < 1) throw ConfigError("stopping: tau must be positive");
    }
};

// Buyer facing a binomial cost process. Actions: 0 = wait, 1 = accept.
// Rewards are negated costs. Waiting costs p_h per step; reaching k = tau
// forces acceptance of x_tau, charged on the same step as the final wait.
class OptimalStopping {
public:
    using State = PriceState;
    static constexpr int kWait = 0;
    static constexpr int kAccept = 1;

    explicit OptimalStopping(StoppingParams params = {}) : p_(params) { p_.validate(); }

    const StoppingParams& params() const noexcept { return p_; }

    State reset(RngStream&) const { return {p_.x0, 0}; }

    std::vector<int> feasible_actions(const State&) const { return {kWait, kAccept}; }

    int horizon() const { return p_.tau; }

    double reward_bound() const { return p_.x0 * std::pow(p_.f_u, p_.tau) + p_.tau * p_.p_h; }

    Transition<State> step(const State& s, int action, RngStream& rng) const {
        return resolve(s, action, rng.bernoulli(p_.p));
    }

    std::vector<WeightedState<State>> initial_distribution() const { return {{1.0, {p_.x0, 0}}}; }

    std::vector<Outcome<State>> outcomes(const State& s, int action) const {
        if (action == kAccept) {
            auto t = resolve(s, action, false);
            return {{1.0, t.next, t.reward, true}};
        }
        auto up = resolve(s, action, true);
        auto down = resolve(s, action, false);
        return {{p_.p, up.next, up.reward, up.terminal}, {1.0 - p_.p, down.next, down.reward, down.terminal}};
    }

    // (1, x_k, k/tau, -x_k) in the block of the chosen action; the last entry is the accept payoff.
    FeatureMap<State> default_features() const {
        const double tau = p_.tau;
        return {8, [tau](const State& s, int a) {
                    Vector phi(8, 0.0);
                    const std::size_t off = a == kWait ? 0 : 4;
                    phi[off] = 1.0;
                    phi[off + 1] = s.x;
                    phi[off + 2] = s.k / tau;
                    phi[off + 3] = -s.x;
                    return phi;
                }};
    }

private:
    Transition<State> resolve(const State& s, int action, bool up) const {
        if (action == kAccept) return {s, -s.x, true};
        if (action != kWait) throw Error("stopping: unknown action");
        State next{s.x * (up ? p_.f_u : p_.f_d), s.k + 1};
        if (next.k >= p_.tau) return {next, -p_.p_h - next.x, true};
        return {next, -p_.p_h, false};
    }

    StoppingParams p_;
};

}  // namespace mvpg::env
