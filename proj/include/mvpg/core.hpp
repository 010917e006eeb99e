#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace mvpg {

using Vector = std::vector<double>;

// Error hierarchy. Everything thrown by the library derives from Error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class StepsizeConditionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

class DivergenceError : public Error {
public:
    DivergenceError(std::uint64_t episode, const std::string& what)
        : Error("diverged at episode " + std::to_string(episode) + ": " + what), episode_(episode) {}
    std::uint64_t episode() const noexcept { return episode_; }

private:
    std::uint64_t episode_;
};

class EnumerationLimitError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

inline bool all_finite(const Vector& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void axpy(double a, const Vector& x, Vector& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

inline double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// One trajectory between two visits of the recurrent state.
class EpisodeTrace {
public:
    EpisodeTrace() = default;

    EpisodeTrace(std::vector<double> rewards, std::vector<Vector> scores)
        : rewards_(std::move(rewards)), scores_(std::move(scores)) {
        if (rewards_.empty()) throw Error("episode trace must contain at least one step");
        if (rewards_.size() != scores_.size())
            throw Error("episode trace needs exactly one score vector per step");
        const std::size_t d = scores_.front().size();
        for (const auto& s : scores_)
            if (s.size() != d) throw Error("episode trace score vectors differ in dimension");
        return_ = std::accumulate(rewards_.begin(), rewards_.end(), 0.0);
    }

    const std::vector<double>& rewards() const noexcept { return rewards_; }
    const std::vector<Vector>& scores() const noexcept { return scores_; }
    std::size_t length() const noexcept { return rewards_.size(); }
    std::size_t dimension() const noexcept { return scores_.empty() ? 0 : scores_.front().size(); }
    double return_total() const noexcept { return return_; }

private:
    std::vector<double> rewards_;
    std::vector<Vector> scores_;
    double return_ = 0.0;
};

// Likelihood-ratio derivative: sum of per-step score vectors.
inline Vector omega(const EpisodeTrace& trace) {
    Vector out(trace.dimension(), 0.0);
    for (const auto& s : trace.scores()) axpy(1.0, s, out);
    return out;
}

struct Iterate {
    Vector theta;
    double y = 0.0;

    bool finite() const { return std::isfinite(y) && all_finite(theta); }
    friend bool operator==(const Iterate&, const Iterate&) = default;
};

class StepsizeSchedule {
public:
    struct Constant {
        double value;
    };
    struct Power {
        double scale;
        double exponent;
    };

    static StepsizeSchedule constant(double value) {
        if (!(value > 0.0) || !std::isfinite(value))
            throw ConfigError("constant stepsize must be positive and finite");
        return StepsizeSchedule(Constant{value});
    }

    // beta_t = scale * t^-exponent. Exponents in (0.5, 1] give sum beta = inf, sum beta^2 < inf.
    static StepsizeSchedule power(double scale, double exponent) {
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw ConfigError("power stepsize scale must be positive and finite");
        if (!(exponent > 0.5 && exponent <= 1.0))
            throw ConfigError("power stepsize exponent must lie in (0.5, 1] (Robbins-Monro)");
        return StepsizeSchedule(Power{scale, exponent});
    }

    double at(std::uint64_t t) const {
        if (t < 1) throw Error("stepsize schedules are indexed from t = 1");
        if (const auto* c = std::get_if<Constant>(&kind_)) return c->value;
        const auto& p = std::get<Power>(kind_);
        return p.scale * std::pow(static_cast<double>(t), -p.exponent);
    }

    bool is_constant() const noexcept { return std::holds_alternative<Constant>(kind_); }
    const std::variant<Constant, Power>& kind() const noexcept { return kind_; }

private:
    explicit StepsizeSchedule(std::variant<Constant, Power> k) : kind_(k) {}
    std::variant<Constant, Power> kind_;
};

inline double schedule_at(const StepsizeSchedule& s, std::uint64_t t) { return s.at(t); }

struct LastIterate {};
struct UniformRandomIterate {};
struct WeightedRandomIterate {
    double lipschitz;
};
using OutputOption = std::variant<LastIterate, UniformRandomIterate, WeightedRandomIterate>;

// Weight of iterate t under the weighted random-output rule:
// beta_t^min - (L/2) (beta_t^max)^2.
inline double output_weight(const StepsizeSchedule& theta, const StepsizeSchedule& y, double lipschitz,
                            std::uint64_t t) {
    const double bt = theta.at(t), by = y.at(t);
    const double bmin = std::min(bt, by), bmax = std::max(bt, by);
    return bmin - 0.5 * lipschitz * bmax * bmax;
}

struct RiskConfig {
    double lambda = 1.0;
    double zeta = 0.0;
    StepsizeSchedule theta_schedule = StepsizeSchedule::constant(0.01);
    StepsizeSchedule y_schedule = StepsizeSchedule::constant(0.01);
    std::uint64_t episodes = 1000;
    OutputOption output_option = LastIterate{};
    std::uint64_t seed = 0;

    // Throws ConfigError when an invariant is violated.
    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be positive and finite");
        if (!std::isfinite(zeta)) throw ConfigError("zeta must be finite");
        if (episodes < 1) throw ConfigError("episodes must be positive");
        if (const auto* w = std::get_if<WeightedRandomIterate>(&output_option)) {
            if (!(w->lipschitz > 0.0)) throw ConfigError("weighted output needs a positive Lipschitz constant");
            for (std::uint64_t t = 1; t <= episodes; ++t) {
                if (!(output_weight(theta_schedule, y_schedule, w->lipschitz, t) > 0.0))
                    throw StepsizeConditionError("stepsizes violate 2*beta_min > L*beta_max^2 at t = " +
                                                 std::to_string(t));
                if (theta_schedule.is_constant() && y_schedule.is_constant()) break;
            }
        }
    }
};

}  // namespace mvpg
