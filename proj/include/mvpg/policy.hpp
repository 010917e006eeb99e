#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "mvpg/core.hpp"
#include "mvpg/random.hpp"

namespace mvpg {

template <class State>
struct FeatureMap {
    std::size_t dimension = 0;
    std::function<Vector(const State&, int action)> evaluate;
};

// Gibbs (Boltzmann) policy over linear features:
//   pi(a|s) = exp(theta . phi(s,a) / T) / sum_b exp(theta . phi(s,b) / T).
// Actions are integer ids; the feasible set for a state comes from `actions`.
template <class State>
class GibbsPolicy {
public:
    using ActionSet = std::function<std::vector<int>(const State&)>;

    GibbsPolicy(FeatureMap<State> features, ActionSet actions, double temperature = 1.0)
        : features_(std::move(features)), actions_(std::move(actions)), temperature_(temperature) {
        if (features_.dimension == 0 || !features_.evaluate) throw ConfigError("feature map is empty");
        if (!(temperature_ > 0.0) || !std::isfinite(temperature_))
            throw ConfigError("temperature must be positive and finite");
    }

    std::size_t dimension() const noexcept { return features_.dimension; }
    double temperature() const noexcept { return temperature_; }
    const FeatureMap<State>& features() const noexcept { return features_; }

    std::vector<int> feasible_actions(const State& s) const {
        auto acts = actions_(s);
        if (acts.empty()) throw Error("no actions");
        return acts;
    }

    // Probabilities aligned with feasible_actions(s).
    std::vector<double> action_probabilities(const Vector& theta, const State& s) const {
        return probabilities_from_logits(logits(theta, s, feasible_actions(s)));
    }

    double probability(const Vector& theta, const State& s, int action) const {
        const auto acts = feasible_actions(s);
        const auto probs = probabilities_from_logits(logits(theta, s, acts));
        return probs[index_of(acts, action)];
    }

    double log_probability(const Vector& theta, const State& s, int action) const {
        const auto acts = feasible_actions(s);
        const auto z = logits(theta, s, acts);
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - zmax);
        return z[index_of(acts, action)] - zmax - std::log(sum);
    }

    // grad_theta ln pi(a|s) = (phi(s,a) - E_pi[phi(s,.)]) / T
    Vector score(const Vector& theta, const State& s, int action) const {
        const auto acts = feasible_actions(s);
        const std::size_t chosen = index_of(acts, action);
        std::vector<Vector> phis;
        phis.reserve(acts.size());
        for (int a : acts) phis.push_back(feature(s, a));
        const auto probs = probabilities_from_logits(logits_from(theta, phis));
        Vector out = phis[chosen];
        for (std::size_t i = 0; i < acts.size(); ++i) axpy(-probs[i], phis[i], out);
        for (double& v : out) v /= temperature_;
        return out;
    }

    // Inverse-CDF sampling on a single uniform draw u in [0, 1).
    int sample_action_with_draw(const Vector& theta, const State& s, double u) const {
        const auto acts = feasible_actions(s);
        const auto probs = probabilities_from_logits(logits(theta, s, acts));
        double cum = 0.0;
        for (std::size_t i = 0; i < acts.size(); ++i) {
            cum += probs[i];
            if (u < cum) return acts[i];
        }
        return acts.back();
    }

    int sample_action(const Vector& theta, const State& s, RngStream& rng) const {
        return sample_action_with_draw(theta, s, rng.uniform());
    }

    // Samples an action and returns it together with its score, sharing one
    // feature evaluation pass.
    std::pair<int, Vector> sample_with_score(const Vector& theta, const State& s, RngStream& rng) const {
        const auto acts = feasible_actions(s);
        std::vector<Vector> phis;
        phis.reserve(acts.size());
        for (int a : acts) phis.push_back(feature(s, a));
        const auto probs = probabilities_from_logits(logits_from(theta, phis));
        const double u = rng.uniform();
        std::size_t chosen = acts.size() - 1;
        double cum = 0.0;
        for (std::size_t i = 0; i < acts.size(); ++i) {
            cum += probs[i];
            if (u < cum) {
                chosen = i;
                break;
            }
        }
        Vector sc = phis[chosen];
        for (std::size_t i = 0; i < acts.size(); ++i) axpy(-probs[i], phis[i], sc);
        for (double& v : sc) v /= temperature_;
        return {acts[chosen], std::move(sc)};
    }

    // Softmax with max-logit subtraction.
    static std::vector<double> probabilities_from_logits(const std::vector<double>& z) {
        if (z.empty()) throw Error("no actions");
        const double zmax = *std::max_element(z.begin(), z.end());
        std::vector<double> p(z.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i) {
            p[i] = std::exp(z[i] - zmax);
            sum += p[i];
        }
        for (double& v : p) v /= sum;
        return p;
    }

private:
    Vector feature(const State& s, int a) const {
        Vector phi = features_.evaluate(s, a);
        if (phi.size() != features_.dimension) throw Error("feature map returned wrong dimension");
        return phi;
    }

    std::vector<double> logits(const Vector& theta, const State& s, const std::vector<int>& acts) const {
        std::vector<Vector> phis;
        phis.reserve(acts.size());
        for (int a : acts) phis.push_back(feature(s, a));
        return logits_from(theta, phis);
    }

    std::vector<double> logits_from(const Vector& theta, const std::vector<Vector>& phis) const {
        if (theta.size() != features_.dimension) throw Error("theta dimension does not match feature map");
        std::vector<double> z;
        z.reserve(phis.size());
        for (const auto& phi : phis) z.push_back(dot(theta, phi) / temperature_);
        return z;
    }

    static std::size_t index_of(const std::vector<int>& acts, int action) {
        const auto it = std::find(acts.begin(), acts.end(), action);
        if (it == acts.end()) throw Error("action " + std::to_string(action) + " is not feasible in this state");
        return static_cast<std::size_t>(it - acts.begin());
    }

    FeatureMap<State> features_;
    ActionSet actions_;
    double temperature_;
};

}  // namespace mvpg
