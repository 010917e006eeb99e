#pragma once

#include <cmath>

#include "mvpg/environment.hpp"

namespace mvpg::env {

// Explicit tabular MDP, small enough for exhaustive trajectory enumeration.
struct ChainSpec {
    struct Branch {
        double probability = 0.0;
        int next = 0;
        double reward = 0.0;
        bool terminal = false;
    };

    int n_states = 1;
    // actions[s] lists the action ids feasible in s.
    std::vector<std::vector<int>> actions;
    // table[s][a] is the outcome distribution of taking action a in state s.
    std::vector<std::vector<std::vector<Branch>>> table;
    std::vector<double> initial;
    int horizon = 1;

    static constexpr int kMaxStates = 10;
    static constexpr int kMaxActions = 4;
    static constexpr int kMaxHorizon = 8;

    int max_actions() const {
        int m = 0;
        for (const auto& row : table) m = std::max<int>(m, static_cast<int>(row.size()));
        return m;
    }

    void validate() const {
        if (n_states < 1 || n_states > kMaxStates) throw ConfigError("chain: state count must lie in [1, 10]");
        if (horizon < 1 || horizon > kMaxHorizon) throw ConfigError("chain: horizon must lie in [1, 8]");
        if (static_cast<int>(table.size()) != n_states || static_cast<int>(actions.size()) != n_states ||
            static_cast<int>(initial.size()) != n_states)
            throw ConfigError("chain: tables must have one row per state");
        auto check_row = [](const auto& probs, const char* what) {
            double sum = 0.0;
            for (double p : probs) {
                if (p < 0.0) throw ConfigError(std::string("chain: negative probability in ") + what);
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-12) throw ConfigError(std::string("chain: ") + what + " does not sum to 1");
        };
        check_row(initial, "initial distribution");
        for (int s = 0; s < n_states; ++s) {
            if (actions[s].empty()) throw ConfigError("chain: every state needs at least one action");
            if (static_cast<int>(table[s].size()) > kMaxActions) throw ConfigError("chain: at most 4 actions");
            for (int a : actions[s]) {
                if (a < 0 || a >= static_cast<int>(table[s].size()) || table[s][a].empty())
                    throw ConfigError("chain: feasible action without outcome table");
                std::vector<double> probs;
                for (const auto& b : table[s][a]) {
                    if (b.next < 0 || b.next >= n_states) throw ConfigError("chain: next state out of range");
                    probs.push_back(b.probability);
                }
                check_row(probs, "transition row");
            }
        }
    }
};

struct ChainState {
    int s = 0;
    int k = 0;
};

class ChainMdp {
public:
    using State = ChainState;

    explicit ChainMdp(ChainSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

    const ChainSpec& spec() const noexcept { return spec_; }

    State reset(RngStream& rng) const {
        const double u = rng.uniform();
        double cum = 0.0;
        for (int s = 0; s < spec_.n_states; ++s) {
            cum += spec_.initial[s];
            if (u < cum) return {s, 0};
        }
        return {spec_.n_states - 1, 0};
    }

    std::vector<int> feasible_actions(const State& st) const { return spec_.actions.at(st.s); }

    int horizon() const { return spec_.horizon; }

    double reward_bound() const {
        double r = 0.0;
        for (const auto& row : spec_.table)
            for (const auto& out : row)
                for (const auto& b : out) r = std::max(r, std::abs(b.reward));
        return r;
    }

    Transition<State> step(const State& st, int action, RngStream& rng) const {
        const auto outs = outcomes(st, action);
        const double u = rng.uniform();
        double cum = 0.0;
        for (const auto& o : outs) {
            cum += o.probability;
            if (u < cum) return {o.next, o.reward, o.terminal};
        }
        const auto& o = outs.back();
        return {o.next, o.reward, o.terminal};
    }

    std::vector<WeightedState<State>> initial_distribution() const {
        std::vector<WeightedState<State>> out;
        for (int s = 0; s < spec_.n_states; ++s)
            if (spec_.initial[s] > 0.0) out.push_back({spec_.initial[s], {s, 0}});
        return out;
    }

    // Reaching the horizon ends the episode regardless of the branch's flag.
    std::vector<Outcome<State>> outcomes(const State& st, int action) const {
        const auto& acts = spec_.actions.at(st.s);
        if (std::find(acts.begin(), acts.end(), action) == acts.end()) throw Error("chain: infeasible action");
        std::vector<Outcome<State>> out;
        for (const auto& b : spec_.table[st.s][action]) {
            if (b.probability == 0.0) continue;
            const State next{b.next, st.k + 1};
            out.push_back({b.probability, next, b.reward, b.terminal || next.k >= spec_.horizon});
        }
        return out;
    }

    // One-hot over (state, action).
    FeatureMap<State> default_features() const {
        const int na = spec_.max_actions();
        const std::size_t dim = static_cast<std::size_t>(spec_.n_states * na);
        return {dim, [na, dim](const State& st, int a) {
                    Vector phi(dim, 0.0);
                    phi[static_cast<std::size_t>(st.s * na + a)] = 1.0;
                    return phi;
                }};
    }

private:
    ChainSpec spec_;
};

// One state, two arms: arm 0 pays `safe` surely, arm 1 pays low or high with equal odds.
inline ChainSpec two_armed_bandit(double safe = 1.0, double low = 0.0, double high = 2.0) {
    ChainSpec spec;
    spec.n_states = 1;
    spec.actions = {{0, 1}};
    spec.table = {{{{1.0, 0, safe, true}}, {{0.5, 0, low, true}, {0.5, 0, high, true}}}};
    spec.initial = {1.0};
    spec.horizon = 1;
    return spec;
}

// Three states, two actions, horizon 4, stochastic rewards and early termination.
inline ChainSpec three_state_chain() {
    using B = ChainSpec::Branch;
    ChainSpec spec;
    spec.n_states = 3;
    spec.actions = {{0, 1}, {0, 1}, {0, 1}};
    spec.table = {
        {{B{0.7, 1, 1.0, false}, B{0.3, 0, 0.0, false}}, {B{0.5, 2, 2.0, false}, B{0.5, 0, -1.0, false}}},
        {{B{0.6, 2, 0.5, false}, B{0.4, 0, 1.5, false}}, {B{0.2, 1, 3.0, true}, B{0.8, 2, 0.0, false}}},
        {{B{0.5, 0, 1.0, false}, B{0.5, 1, -0.5, true}}, {B{1.0, 2, 0.25, false}}},
    };
    spec.initial = {0.6, 0.4, 0.0};
    spec.horizon = 4;
    return spec;
}

}  // namespace mvpg::env
