#pragma once

#include <algorithm>
#include <cmath>

#include "mvpg/environment.hpp"

namespace mvpg::env {

struct OptionParams {
    double w_put = 1.0;
    double w_call = 1.5;
    double x0 = 1.25;
    double f_u = 9.0 / 8.0;
    double f_d = 8.0 / 9.0;
    double p = 0.45;
    int tau = 20;

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("option: p must lie in [0, 1]");
        if (!(x0 > 0.0 && f_u > 0.0 && f_d > 0.0)) throw ConfigError("option: prices and factors must be positive");
        if (tau < 1) throw ConfigError("option: tau must be positive");
    }
};

struct PriceState {
    double x = 0.0;
    int k = 0;
};

// Holder of a put (strike w_put) and a call (strike w_call) on a binomial price.
// Actions: 0 = hold, 1 = execute. Holding through the last step exercises at x_tau.
class AmericanOption {
public:
    using State = PriceState;
    static constexpr int kHold = 0;
    static constexpr int kExecute = 1;

    explicit AmericanOption(OptionParams params = {}) : p_(params) { p_.validate(); }

    const OptionParams& params() const noexcept { return p_; }

    double payoff(double x) const { return std::max(0.0, p_.w_put - x) + std::max(0.0, x - p_.w_call); }

    State reset(RngStream&) const { return {p_.x0, 0}; }

    std::vector<int> feasible_actions(const State&) const { return {kHold, kExecute}; }

    int horizon() const { return p_.tau; }

    double reward_bound() const { return std::max(p_.w_put, p_.x0 * std::pow(p_.f_u, p_.tau) - p_.w_call); }

    Transition<State> step(const State& s, int action, RngStream& rng) const {
        return resolve(s, action, rng.bernoulli(p_.p));
    }

    std::vector<WeightedState<State>> initial_distribution() const { return {{1.0, {p_.x0, 0}}}; }

    std::vector<Outcome<State>> outcomes(const State& s, int action) const {
        if (action == kExecute) {
            auto t = resolve(s, action, false);
            return {{1.0, t.next, t.reward, true}};
        }
        auto up = resolve(s, action, true);
        auto down = resolve(s, action, false);
        return {{p_.p, up.next, up.reward, up.terminal}, {1.0 - p_.p, down.next, down.reward, down.terminal}};
    }

    // (1, x_k, k/tau, g(x_k)) in the block of the chosen action.
    FeatureMap<State> default_features() const {
        const OptionParams prm = p_;
        return {8, [prm](const State& s, int a) {
                    Vector phi(8, 0.0);
                    const std::size_t off = a == kHold ? 0 : 4;
                    phi[off] = 1.0;
                    phi[off + 1] = s.x;
                    phi[off + 2] = s.k / static_cast<double>(prm.tau);
                    phi[off + 3] = std::max(0.0, prm.w_put - s.x) + std::max(0.0, s.x - prm.w_call);
                    return phi;
                }};
    }

private:
    Transition<State> resolve(const State& s, int action, bool up) const {
        if (action == kExecute) return {s, payoff(s.x), true};
        if (action != kHold) throw Error("option: unknown action");
        State next{s.x * (up ? p_.f_u : p_.f_d), s.k + 1};
        if (next.k >= p_.tau) return {next, payoff(next.x), true};
        return {next, 0.0, false};
    }

    OptionParams p_;
};

}  // namespace mvpg::env
