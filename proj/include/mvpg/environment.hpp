#pragma once

#include <concepts>
#include <vector>

#include "mvpg/core.hpp"
#include "mvpg/policy.hpp"
#include "mvpg/random.hpp"

namespace mvpg {

template <class State>
struct Transition {
    State next;
    double reward = 0.0;
    bool terminal = false;
};

// One branch of the transition law, for environments the oracle can enumerate.
template <class State>
struct Outcome {
    double probability = 0.0;
    State next;
    double reward = 0.0;
    bool terminal = false;
};

template <class State>
struct WeightedState {
    double probability = 0.0;
    State state;
};

// Episodic MDP contract. Every episode must end within horizon() steps.
template <class E>
concept Environment = requires(const E& env, const typename E::State& s, int a, RngStream& rng) {
    typename E::State;
    { env.reset(rng) } -> std::same_as<typename E::State>;
    { env.step(s, a, rng) } -> std::same_as<Transition<typename E::State>>;
    { env.feasible_actions(s) } -> std::same_as<std::vector<int>>;
    { env.horizon() } -> std::convertible_to<int>;
    { env.reward_bound() } -> std::convertible_to<double>;
    { env.default_features() } -> std::same_as<FeatureMap<typename E::State>>;
};

template <class E>
concept EnumerableEnvironment = Environment<E> && requires(const E& env, const typename E::State& s, int a) {
    { env.initial_distribution() } -> std::same_as<std::vector<WeightedState<typename E::State>>>;
    { env.outcomes(s, a) } -> std::same_as<std::vector<Outcome<typename E::State>>>;
};

template <Environment E>
GibbsPolicy<typename E::State> make_policy(const E& env, double temperature = 1.0) {
    return GibbsPolicy<typename E::State>(
        env.default_features(), [&env](const typename E::State& s) { return env.feasible_actions(s); },
        temperature);
}

template <Environment E>
GibbsPolicy<typename E::State> make_policy(const E& env, FeatureMap<typename E::State> features,
                                           double temperature = 1.0) {
    return GibbsPolicy<typename E::State>(
        std::move(features), [&env](const typename E::State& s) { return env.feasible_actions(s); }, temperature);
}

// Runs one episode under pi_theta. Environment noise and action draws come
// from separate streams.
template <Environment E>
EpisodeTrace rollout(const E& env, const GibbsPolicy<typename E::State>& policy, const Vector& theta,
                     RngStream& env_rng, RngStream& policy_rng) {
    std::vector<double> rewards;
    std::vector<Vector> scores;
    auto state = env.reset(env_rng);
    const int cap = env.horizon();
    for (int k = 0; k < cap; ++k) {
        auto [action, sc] = policy.sample_with_score(theta, state, policy_rng);
        auto tr = env.step(state, action, env_rng);
        rewards.push_back(tr.reward);
        scores.push_back(std::move(sc));
        if (tr.terminal) break;
        state = std::move(tr.next);
    }
    return EpisodeTrace(std::move(rewards), std::move(scores));
}

// Return of one episode without building scores (evaluation batches).
template <Environment E>
double rollout_return(const E& env, const GibbsPolicy<typename E::State>& policy, const Vector& theta,
                      RngStream& env_rng, RngStream& policy_rng) {
    double total = 0.0;
    auto state = env.reset(env_rng);
    const int cap = env.horizon();
    for (int k = 0; k < cap; ++k) {
        const int action = policy.sample_action(theta, state, policy_rng);
        auto tr = env.step(state, action, env_rng);
        total += tr.reward;
        if (tr.terminal) break;
        state = std::move(tr.next);
    }
    return total;
}

}  // namespace mvpg
