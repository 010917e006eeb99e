#pragma once

#include <cmath>
#include <numeric>

#include "mvpg/environment.hpp"

namespace mvpg::env {

struct PortfolioParams {
    double r_l = 1.001;
    double r_nl_high = 2.0;
    double r_nl_low = 1.1;
    double p_risk = 0.05;
    double p_switch = 0.1;
    int W = 4;
    double eta = 0.2;
    int tau = 50;
    double startup_cash = 100000.0;

    void validate() const {
        auto prob = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!prob(p_risk) || !prob(p_switch)) throw ConfigError("portfolio: probabilities must lie in [0, 1]");
        if (!(r_l > 0.0 && r_nl_high > 0.0 && r_nl_low > 0.0)) throw ConfigError("portfolio: rates must be positive");
        if (!(eta > 0.0 && eta < 1.0)) throw ConfigError("portfolio: eta must lie in (0, 1)");
        if (W < 1 || tau < 1) throw ConfigError("portfolio: W and tau must be positive");
        if (!(startup_cash > 0.0)) throw ConfigError("portfolio: startup cash must be positive");
    }
};

struct PortfolioState {
    double liquid = 0.0;
    // Slot i holds the tranche with i + 1 steps to maturity: book value and the
    // gross rate locked in when it was bought.
    std::vector<double> tranche;
    std::vector<double> tranche_rate;
    int high_regime = 0;
    int k = 0;

    double wealth() const { return std::accumulate(tranche.begin(), tranche.end(), liquid); }
};

// Liquid asset with gross per-step rate r_l and a non-liquid asset locked for W
// steps. Actions: 0 = do nothing, 1 = move eta of total wealth into a new tranche.
// Per step: regime switch, per-tranche default, maturity payout at the locked
// rate, liquid accrual, then the investment. Reward is the change in wealth.
class Portfolio {
public:
    using State = PortfolioState;
    static constexpr int kDoNothing = 0;
    static constexpr int kInvest = 1;

    explicit Portfolio(PortfolioParams params = {}) : p_(params) { p_.validate(); }

    const PortfolioParams& params() const noexcept { return p_; }

    // The starting regime is drawn uniformly, so E[r_nl(k)] is the midpoint for every k.
    State reset(RngStream& rng) const {
        State s;
        s.liquid = p_.startup_cash;
        s.tranche.assign(p_.W, 0.0);
        s.tranche_rate.assign(p_.W, 0.0);
        s.high_regime = rng.bernoulli(0.5) ? 1 : 0;
        s.k = 0;
        return s;
    }

    std::vector<int> feasible_actions(const State&) const { return {kDoNothing, kInvest}; }

    int horizon() const { return p_.tau; }

    // Wealth can at most grow by the best compound rate; the increment is bounded by that.
    double reward_bound() const {
        const double g = std::max(p_.r_l, p_.r_nl_high);
        return p_.startup_cash * std::pow(std::max(g, 1.0), p_.tau);
    }

    double rate(int high) const { return high ? p_.r_nl_high : p_.r_nl_low; }

    double expected_rate() const { return 0.5 * (p_.r_nl_high + p_.r_nl_low); }

    // x(k) in R^{W+2}: liquid fraction, tranche fractions by time to maturity,
    // and the regime deviation r_nl(k) - E[r_nl(k)].
    Vector observation(const State& s) const {
        const double w = s.wealth();
        Vector x(p_.W + 2);
        x[0] = s.liquid / w;
        for (int i = 0; i < p_.W; ++i) x[i + 1] = s.tranche[i] / w;
        x[p_.W + 1] = rate(s.high_regime) - expected_rate();
        return x;
    }

    Transition<State> step(const State& s, int action, RngStream& rng) const {
        check_allocation(s);
        State n = s;
        const double before = s.wealth();

        if (rng.bernoulli(p_.p_switch)) n.high_regime = 1 - n.high_regime;

        for (int i = 0; i < p_.W; ++i) {
            const bool defaulted = rng.bernoulli(p_.p_risk);
            if (n.tranche[i] > 0.0 && defaulted) n.tranche[i] = 0.0;
        }

        const double matured = n.tranche[0] * n.tranche_rate[0];
        for (int i = 0; i + 1 < p_.W; ++i) {
            n.tranche[i] = n.tranche[i + 1];
            n.tranche_rate[i] = n.tranche_rate[i + 1];
        }
        n.tranche[p_.W - 1] = 0.0;
        n.tranche_rate[p_.W - 1] = 0.0;
        n.liquid += matured;

        n.liquid *= p_.r_l;

        if (action == kInvest) {
            const double w = n.wealth();
            if (n.liquid / w >= p_.eta) {
                const double amount = p_.eta * w;
                n.liquid -= amount;
                n.tranche[p_.W - 1] = amount;
                n.tranche_rate[p_.W - 1] = rate(n.high_regime);
            }
        } else if (action != kDoNothing) {
            throw Error("portfolio: unknown action");
        }

        n.k = s.k + 1;
        const double reward = n.wealth() - before;
        const bool terminal = n.k >= p_.tau;
        return {std::move(n), reward, terminal};
    }

    // Raw observation plus a bias, in the block of the chosen action.
    FeatureMap<State> default_features() const {
        const std::size_t block = p_.W + 3;
        const Portfolio self = *this;
        return {2 * block, [self, block](const State& s, int a) {
                    Vector phi(2 * block, 0.0);
                    const std::size_t off = a == kDoNothing ? 0 : block;
                    const Vector x = self.observation(s);
                    phi[off] = 1.0;
                    for (std::size_t i = 0; i < x.size(); ++i) phi[off + 1 + i] = x[i];
                    return phi;
                }};
    }

    void check_allocation(const State& s) const {
        if (static_cast<int>(s.tranche.size()) != p_.W) throw Error("portfolio: state has wrong tranche count");
        const Vector x = observation(s);
        double sum = 0.0;
        for (int i = 0; i <= p_.W; ++i) {
            if (x[i] < -1e-12 || x[i] > 1.0 + 1e-12) throw Error("portfolio: allocation entry outside [0, 1]");
            sum += x[i];
        }
        if (std::abs(sum - 1.0) > 1e-9) throw Error("portfolio: allocation does not sum to 1");
    }

private:
    PortfolioParams p_;
};

}  // namespace mvpg::env
