#pragma once

#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mvpg/environments/american_option.hpp"
#include "mvpg/environments/chain.hpp"
#include "mvpg/environments/optimal_stopping.hpp"
#include "mvpg/environments/portfolio.hpp"
#include "mvpg/metrics.hpp"
#include "mvpg/optimizers.hpp"

namespace mvpg {

using Json = nlohmann::json;

inline constexpr const char* kCsvHeader = "env,algo,lambda,seed,eval_mean,eval_std,eval_cvar_0.05,episodes,wall_ms";

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [k, v] : j.items())
        if (!allowed.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <class T>
void read(const Json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

inline double json_number(const Json& j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }
inline Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline StepsizeSchedule schedule_from_json(const Json& j) {
    if (j.is_number()) return StepsizeSchedule::constant(j.get<double>());
    detail::check_keys(j, {"type", "value", "scale", "exponent"}, "schedule");
    std::string type = "constant";
    detail::read(j, "type", type);
    if (type == "constant") {
        if (!j.contains("value")) throw ConfigError("constant schedule needs 'value'");
        return StepsizeSchedule::constant(j.at("value").get<double>());
    }
    if (type == "power") {
        if (!j.contains("scale") || !j.contains("exponent")) throw ConfigError("power schedule needs 'scale' and 'exponent'");
        return StepsizeSchedule::power(j.at("scale").get<double>(), j.at("exponent").get<double>());
    }
    throw ConfigError("unknown schedule type '" + type + "'");
}

inline Json schedule_to_json(const StepsizeSchedule& s) {
    return std::visit(
        [](const auto& k) -> Json {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, StepsizeSchedule::Constant>)
                return {{"type", "constant"}, {"value", k.value}};
            else
                return {{"type", "power"}, {"scale", k.scale}, {"exponent", k.exponent}};
        },
        s.kind());
}

struct ExperimentConfig {
    std::string environment = "american_option";
    Json params = Json::object();
    Algorithm algorithm = Algorithm::Mvp;
    std::vector<double> lambda_grid{1.0};
    double zeta = 0.0;
    std::uint64_t episodes = 100000;
    StepsizeSchedule theta_schedule = StepsizeSchedule::constant(0.01);
    StepsizeSchedule y_schedule = StepsizeSchedule::constant(0.01);
    double initial_y = 0.0;
    std::string output_option = "last";
    double lipschitz = 1.0;
    std::vector<std::uint64_t> seeds{1};
    std::uint64_t eval_episodes = 10000;
    std::uint64_t snapshot_stride = 0;
    std::uint64_t curve_points = 200;
    double temperature = 1.0;
    std::string features = "default";
    TwoTimescaleSchedules two_timescale;
    std::string output;
    std::string format = "csv";
    bool record_timing = false;
    unsigned workers = 0;

    OutputOption output_choice() const {
        if (output_option == "last") return LastIterate{};
        if (output_option == "uniform") return UniformRandomIterate{};
        if (output_option == "weighted") return WeightedRandomIterate{lipschitz};
        throw ConfigError("unknown output_option '" + output_option + "'");
    }

    RiskConfig risk_config(double lambda, std::uint64_t seed) const {
        RiskConfig rc;
        rc.lambda = lambda;
        rc.zeta = zeta;
        rc.theta_schedule = theta_schedule;
        rc.y_schedule = y_schedule;
        rc.episodes = episodes;
        rc.output_option = output_choice();
        rc.seed = seed;
        return rc;
    }

    void validate() const;

    static ExperimentConfig from_json(const Json& j) {
        try {
            return parse(j);
        } catch (const Json::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    static ExperimentConfig parse(const Json& j) {
        using detail::read;
        detail::check_keys(j,
                           {"environment", "params", "algorithm", "lambda", "lambda_grid", "zeta", "episodes",
                            "theta_schedule", "y_schedule", "initial_y", "output_option", "lipschitz", "seeds",
                            "eval_episodes", "snapshot_stride", "curve_points", "policy", "two_timescale", "output",
                            "format", "record_timing", "workers"},
                           "config");
        ExperimentConfig c;
        read(j, "environment", c.environment);
        if (j.contains("params")) c.params = j.at("params");
        if (j.contains("algorithm")) c.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
        if (j.contains("lambda") && j.contains("lambda_grid")) throw ConfigError("give either 'lambda' or 'lambda_grid'");
        if (j.contains("lambda")) c.lambda_grid = {j.at("lambda").get<double>()};
        read(j, "lambda_grid", c.lambda_grid);
        read(j, "zeta", c.zeta);
        read(j, "episodes", c.episodes);
        if (j.contains("theta_schedule")) c.theta_schedule = schedule_from_json(j.at("theta_schedule"));
        if (j.contains("y_schedule")) c.y_schedule = schedule_from_json(j.at("y_schedule"));
        read(j, "initial_y", c.initial_y);
        read(j, "output_option", c.output_option);
        read(j, "lipschitz", c.lipschitz);
        read(j, "seeds", c.seeds);
        read(j, "eval_episodes", c.eval_episodes);
        read(j, "snapshot_stride", c.snapshot_stride);
        read(j, "curve_points", c.curve_points);
        if (j.contains("policy")) {
            const auto& p = j.at("policy");
            detail::check_keys(p, {"temperature", "features"}, "policy");
            read(p, "temperature", c.temperature);
            read(p, "features", c.features);
        }
        if (j.contains("two_timescale")) {
            const auto& t = j.at("two_timescale");
            detail::check_keys(t, {"fast", "slow"}, "two_timescale");
            if (t.contains("fast")) c.two_timescale.fast = schedule_from_json(t.at("fast"));
            if (t.contains("slow")) c.two_timescale.slow = schedule_from_json(t.at("slow"));
        }
        read(j, "output", c.output);
        read(j, "format", c.format);
        read(j, "record_timing", c.record_timing);
        read(j, "workers", c.workers);
        c.validate();
        return c;
    }

    Json to_json() const {
        return {{"environment", environment},
                {"params", params},
                {"algorithm", std::string(algorithm_name(algorithm))},
                {"lambda_grid", lambda_grid},
                {"zeta", zeta},
                {"episodes", episodes},
                {"theta_schedule", schedule_to_json(theta_schedule)},
                {"y_schedule", schedule_to_json(y_schedule)},
                {"initial_y", initial_y},
                {"output_option", output_option},
                {"lipschitz", lipschitz},
                {"seeds", seeds},
                {"eval_episodes", eval_episodes},
                {"snapshot_stride", snapshot_stride},
                {"curve_points", curve_points},
                {"policy", {{"temperature", temperature}, {"features", features}}},
                {"two_timescale",
                 {{"fast", schedule_to_json(two_timescale.fast)}, {"slow", schedule_to_json(two_timescale.slow)}}},
                {"output", output},
                {"format", format},
                {"record_timing", record_timing},
                {"workers", workers}};
    }
};

// ---------------------------------------------------------------------------
// Environment construction from config parameters.

inline env::OptionParams option_params(const Json& j) {
    detail::check_keys(j, {"w_put", "w_call", "x0", "f_u", "f_d", "p", "tau"}, "american_option params");
    env::OptionParams p;
    detail::read(j, "w_put", p.w_put);
    detail::read(j, "w_call", p.w_call);
    detail::read(j, "x0", p.x0);
    detail::read(j, "f_u", p.f_u);
    detail::read(j, "f_d", p.f_d);
    detail::read(j, "p", p.p);
    detail::read(j, "tau", p.tau);
    return p;
}

inline env::StoppingParams stopping_params(const Json& j) {
    detail::check_keys(j, {"x0", "f_u", "f_d", "p", "tau", "p_h"}, "optimal_stopping params");
    env::StoppingParams p;
    detail::read(j, "x0", p.x0);
    detail::read(j, "f_u", p.f_u);
    detail::read(j, "f_d", p.f_d);
    detail::read(j, "p", p.p);
    detail::read(j, "tau", p.tau);
    detail::read(j, "p_h", p.p_h);
    return p;
}

inline env::PortfolioParams portfolio_params(const Json& j) {
    detail::check_keys(
        j, {"r_l", "r_nl_high", "r_nl_low", "p_risk", "p_switch", "W", "eta", "tau", "startup_cash"},
        "portfolio params");
    env::PortfolioParams p;
    detail::read(j, "r_l", p.r_l);
    detail::read(j, "r_nl_high", p.r_nl_high);
    detail::read(j, "r_nl_low", p.r_nl_low);
    detail::read(j, "p_risk", p.p_risk);
    detail::read(j, "p_switch", p.p_switch);
    detail::read(j, "W", p.W);
    detail::read(j, "eta", p.eta);
    detail::read(j, "tau", p.tau);
    detail::read(j, "startup_cash", p.startup_cash);
    return p;
}

inline env::ChainSpec bandit_spec(const Json& j) {
    detail::check_keys(j, {"safe", "low", "high"}, "bandit params");
    double safe = 1.0, low = 0.0, high = 2.0;
    detail::read(j, "safe", safe);
    detail::read(j, "low", low);
    detail::read(j, "high", high);
    return env::two_armed_bandit(safe, low, high);
}

// Either {"preset": "three_state"} (the default) or a full table:
// {"n_states", "actions", "table": [[[{"probability","next","reward","terminal"}]]], "initial", "horizon"}.
inline env::ChainSpec chain_spec(const Json& j) {
    detail::check_keys(j, {"preset", "n_states", "actions", "table", "initial", "horizon"}, "chain params");
    if (!j.contains("table")) {
        std::string preset = "three_state";
        detail::read(j, "preset", preset);
        if (preset != "three_state") throw ConfigError("unknown chain preset '" + preset + "'");
        return env::three_state_chain();
    }
    env::ChainSpec spec;
    try {
        spec.n_states = j.at("n_states").get<int>();
        spec.actions = j.at("actions").get<std::vector<std::vector<int>>>();
        spec.initial = j.at("initial").get<std::vector<double>>();
        spec.horizon = j.at("horizon").get<int>();
        for (const auto& row : j.at("table")) {
            auto& out_row = spec.table.emplace_back();
            for (const auto& cell : row) {
                auto& branches = out_row.emplace_back();
                for (const auto& b : cell) {
                    detail::check_keys(b, {"probability", "next", "reward", "terminal"}, "chain branch");
                    env::ChainSpec::Branch br;
                    br.probability = b.at("probability").get<double>();
                    br.next = b.at("next").get<int>();
                    br.reward = b.at("reward").get<double>();
                    detail::read(b, "terminal", br.terminal);
                    branches.push_back(br);
                }
            }
        }
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("chain params: ") + e.what());
    }
    return spec;
}

inline int action_count(const env::AmericanOption&) { return 2; }
inline int action_count(const env::OptimalStopping&) { return 2; }
inline int action_count(const env::Portfolio&) { return 2; }
inline int action_count(const env::ChainMdp& c) { return c.spec().max_actions(); }

template <Environment E>
GibbsPolicy<typename E::State> configured_policy(const E& e, const ExperimentConfig& cfg) {
    if (cfg.features == "default") return make_policy(e, cfg.temperature);
    if (cfg.features == "bias") {
        const int n = action_count(e);
        FeatureMap<typename E::State> fm{static_cast<std::size_t>(n), [n](const typename E::State&, int a) {
                                             Vector v(static_cast<std::size_t>(n), 0.0);
                                             v[static_cast<std::size_t>(a)] = 1.0;
                                             return v;
                                         }};
        return make_policy(e, std::move(fm), cfg.temperature);
    }
    throw ConfigError("unknown policy features '" + cfg.features + "'");
}

// Builds the configured environment and hands (env, policy) to f.
template <class F>
decltype(auto) with_environment(const ExperimentConfig& cfg, F&& f) {
    const auto& name = cfg.environment;
    if (name == "american_option") {
        const env::AmericanOption e(option_params(cfg.params));
        return f(e, configured_policy(e, cfg));
    }
    if (name == "optimal_stopping") {
        const env::OptimalStopping e(stopping_params(cfg.params));
        return f(e, configured_policy(e, cfg));
    }
    if (name == "portfolio") {
        const env::Portfolio e(portfolio_params(cfg.params));
        return f(e, configured_policy(e, cfg));
    }
    if (name == "bandit") {
        const env::ChainMdp e(bandit_spec(cfg.params));
        return f(e, configured_policy(e, cfg));
    }
    if (name == "chain") {
        const env::ChainMdp e(chain_spec(cfg.params));
        return f(e, configured_policy(e, cfg));
    }
    throw ConfigError("unknown environment '" + name + "'");
}

inline void ExperimentConfig::validate() const {
    if (lambda_grid.empty()) throw ConfigError("lambda_grid must not be empty");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (eval_episodes < 2) throw ConfigError("eval_episodes must be at least 2");
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    if (curve_points == 0) throw ConfigError("curve_points must be positive");
    for (double l : lambda_grid) risk_config(l, 0).validate();
    if (!(temperature > 0.0 && std::isfinite(temperature))) throw ConfigError("policy temperature must be positive");
    if (algorithm == Algorithm::Tamar) two_timescale.validate();
    // Constructs the environment and policy once so parameter errors surface here.
    with_environment(*this, [](const auto&, const auto&) { return 0; });
}

// ---------------------------------------------------------------------------
// Results.

struct RunResult {
    std::string env;
    std::string algo;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t root_seed = 0;
    std::uint64_t episodes = 0;
    bool diverged = false;
    std::uint64_t diverged_at = 0;
    std::string error;
    std::uint64_t curve_block = 1;
    std::vector<double> training_curve;
    std::uint64_t output_index = 0;
    Iterate output;
    ReturnStats eval;
    double wall_ms = 0.0;

    double eval_cvar05() const {
        auto it = eval.cvar.find(0.05);
        return it == eval.cvar.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
    }
};

struct SummaryRow {
    double lambda = 0.0;
    std::uint64_t runs = 0;
    std::uint64_t diverged = 0;
    double mean_eval_mean = 0.0;
    double sd_eval_mean = 0.0;
    double mean_eval_std = 0.0;
    double mean_eval_cvar = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RunResult> runs;
    std::vector<SummaryRow> summary;

    bool any_diverged() const {
        for (const auto& r : runs)
            if (r.diverged) return true;
        return false;
    }
};

inline std::uint64_t root_seed(double lambda, std::uint64_t seed) {
    return splitmix64(seed ^ splitmix64(std::bit_cast<std::uint64_t>(lambda)));
}

inline unsigned worker_count(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("MVPG_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    if (cfg.workers > 0) return cfg.workers;
    return std::max(1u, std::thread::hardware_concurrency());
}

inline RunResult run_cell(const ExperimentConfig& cfg, double lambda, std::uint64_t seed) {
    RunResult r;
    r.env = cfg.environment;
    r.algo = algorithm_name(cfg.algorithm);
    r.lambda = lambda;
    r.seed = seed;
    r.root_seed = root_seed(lambda, seed);
    r.episodes = cfg.episodes;
    const auto start = std::chrono::steady_clock::now();

    with_environment(cfg, [&](const auto& e, const auto& pol) {
        RunOptions opts;
        opts.snapshot_stride = cfg.snapshot_stride;
        opts.two_timescale = cfg.two_timescale;
        opts.initial_y = cfg.initial_y;
        try {
            auto tr = run(cfg.algorithm, e, pol, cfg.risk_config(lambda, r.root_seed), opts);
            r.output_index = tr.output.index;
            r.output = tr.output.iterate;
            r.curve_block = std::max<std::uint64_t>(1, cfg.episodes / cfg.curve_points);
            for (std::size_t i = 0; i < tr.returns.size(); i += r.curve_block) {
                const std::size_t end = std::min(tr.returns.size(), i + r.curve_block);
                double s = 0.0;
                for (std::size_t k = i; k < end; ++k) s += tr.returns[k];
                r.training_curve.push_back(s / static_cast<double>(end - i));
            }
            r.eval = summarize(evaluate_policy(e, pol, r.output.theta, cfg.eval_episodes, r.root_seed), {0.05});
        } catch (const DivergenceError& err) {
            r.diverged = true;
            r.diverged_at = err.episode();
            r.error = err.what();
            const double nan = std::numeric_limits<double>::quiet_NaN();
            r.eval.mean = r.eval.std = r.eval.variance = nan;
            r.eval.cvar[0.05] = nan;
        }
        return 0;
    });

    if (cfg.record_timing)
        r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline std::vector<SummaryRow> summarize_grid(const std::vector<double>& grid, const std::vector<RunResult>& runs) {
    std::vector<SummaryRow> rows;
    for (double l : grid) {
        SummaryRow row;
        row.lambda = l;
        std::vector<double> means;
        double stds = 0.0, cvars = 0.0;
        for (const auto& r : runs) {
            if (r.lambda != l) continue;
            ++row.runs;
            if (r.diverged) {
                ++row.diverged;
                continue;
            }
            means.push_back(r.eval.mean);
            stds += r.eval.std;
            cvars += r.eval_cvar05();
        }
        const double n = static_cast<double>(means.size());
        if (means.empty()) {
            row.mean_eval_mean = row.sd_eval_mean = row.mean_eval_std = row.mean_eval_cvar =
                std::numeric_limits<double>::quiet_NaN();
        } else {
            double s = 0.0;
            for (double m : means) s += m;
            row.mean_eval_mean = s / n;
            double ss = 0.0;
            for (double m : means) ss += (m - row.mean_eval_mean) * (m - row.mean_eval_mean);
            row.sd_eval_mean = means.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            row.mean_eval_std = stds / n;
            row.mean_eval_cvar = cvars / n;
        }
        rows.push_back(row);
    }
    return rows;
}

// Runs every (lambda, seed) cell; results come back in grid order regardless of scheduling.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<double, std::uint64_t>> cells;
    for (double l : cfg.lambda_grid)
        for (auto s : cfg.seeds) cells.emplace_back(l, s);

    ExperimentResult out;
    out.config = cfg;
    out.runs.resize(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            try {
                out.runs[i] = run_cell(cfg, cells[i].first, cells[i].second);
            } catch (...) {
                std::lock_guard lock(err_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const unsigned n = std::min<unsigned>(worker_count(cfg), static_cast<unsigned>(cells.size()));
    if (n <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < n; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    out.summary = summarize_grid(cfg.lambda_grid, out.runs);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization.

inline Json stats_to_json(const ReturnStats& s) {
    Json cvar = Json::array();
    for (const auto& [a, v] : s.cvar) cvar.push_back({{"alpha", a}, {"value", detail::number_json(v)}});
    return {{"n", s.n},
            {"mean", detail::number_json(s.mean)},
            {"std", detail::number_json(s.std)},
            {"variance", detail::number_json(s.variance)},
            {"cvar", cvar},
            {"histogram", {{"edges", s.histogram.edges}, {"counts", s.histogram.counts}}}};
}

inline ReturnStats stats_from_json(const Json& j) {
    ReturnStats s;
    s.n = j.at("n").get<std::uint64_t>();
    s.mean = detail::json_number(j.at("mean"));
    s.std = detail::json_number(j.at("std"));
    s.variance = detail::json_number(j.at("variance"));
    for (const auto& c : j.at("cvar")) s.cvar[c.at("alpha").get<double>()] = detail::json_number(c.at("value"));
    s.histogram.edges = j.at("histogram").at("edges").get<std::vector<double>>();
    s.histogram.counts = j.at("histogram").at("counts").get<std::vector<std::uint64_t>>();
    return s;
}

inline Json run_to_json(const RunResult& r) {
    return {{"env", r.env},
            {"algo", r.algo},
            {"lambda", r.lambda},
            {"seed", r.seed},
            {"root_seed", r.root_seed},
            {"episodes", r.episodes},
            {"diverged", r.diverged},
            {"diverged_at", r.diverged_at},
            {"error", r.error},
            {"curve_block", r.curve_block},
            {"training_curve", r.training_curve},
            {"output", {{"index", r.output_index}, {"theta", r.output.theta}, {"y", r.output.y}}},
            {"eval", stats_to_json(r.eval)},
            {"wall_ms", r.wall_ms}};
}

inline RunResult run_from_json(const Json& j) {
    RunResult r;
    r.env = j.at("env").get<std::string>();
    r.algo = j.at("algo").get<std::string>();
    r.lambda = j.at("lambda").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.root_seed = j.at("root_seed").get<std::uint64_t>();
    r.episodes = j.at("episodes").get<std::uint64_t>();
    r.diverged = j.at("diverged").get<bool>();
    r.diverged_at = j.at("diverged_at").get<std::uint64_t>();
    r.error = j.at("error").get<std::string>();
    r.curve_block = j.at("curve_block").get<std::uint64_t>();
    r.training_curve = j.at("training_curve").get<std::vector<double>>();
    r.output_index = j.at("output").at("index").get<std::uint64_t>();
    r.output.theta = j.at("output").at("theta").get<Vector>();
    r.output.y = j.at("output").at("y").get<double>();
    r.eval = stats_from_json(j.at("eval"));
    r.wall_ms = j.at("wall_ms").get<double>();
    return r;
}

inline Json summary_to_json(const SummaryRow& s) {
    return {{"lambda", s.lambda},
            {"runs", s.runs},
            {"diverged", s.diverged},
            {"mean_eval_mean", detail::number_json(s.mean_eval_mean)},
            {"sd_eval_mean", detail::number_json(s.sd_eval_mean)},
            {"mean_eval_std", detail::number_json(s.mean_eval_std)},
            {"mean_eval_cvar_0.05", detail::number_json(s.mean_eval_cvar)}};
}

inline SummaryRow summary_from_json(const Json& j) {
    SummaryRow s;
    s.lambda = j.at("lambda").get<double>();
    s.runs = j.at("runs").get<std::uint64_t>();
    s.diverged = j.at("diverged").get<std::uint64_t>();
    s.mean_eval_mean = detail::json_number(j.at("mean_eval_mean"));
    s.sd_eval_mean = detail::json_number(j.at("sd_eval_mean"));
    s.mean_eval_std = detail::json_number(j.at("mean_eval_std"));
    s.mean_eval_cvar = detail::json_number(j.at("mean_eval_cvar_0.05"));
    return s;
}

inline Json to_json(const ExperimentResult& res) {
    Json runs = Json::array(), summary = Json::array();
    for (const auto& r : res.runs) runs.push_back(run_to_json(r));
    for (const auto& s : res.summary) summary.push_back(summary_to_json(s));
    return {{"config", res.config.to_json()}, {"runs", runs}, {"summary", summary}};
}

inline ExperimentResult result_from_json(const Json& j) {
    ExperimentResult res;
    res.config = ExperimentConfig::from_json(j.at("config"));
    for (const auto& r : j.at("runs")) res.runs.push_back(run_from_json(r));
    for (const auto& s : j.at("summary")) res.summary.push_back(summary_from_json(s));
    return res;
}

inline std::string export_json(const ExperimentResult& res) { return to_json(res).dump(2) + "\n"; }

inline std::string export_csv(const ExperimentResult& res) {
    std::ostringstream os;
    os << kCsvHeader << '\n';
    for (const auto& r : res.runs) {
        os << r.env << ',' << r.algo << ',' << detail::fmt17(r.lambda) << ',' << r.seed << ','
           << detail::fmt17(r.eval.mean) << ',' << detail::fmt17(r.eval.std) << ',' << detail::fmt17(r.eval_cvar05())
           << ',' << r.episodes << ',' << detail::fmt17(r.wall_ms) << '\n';
    }
    return os.str();
}

inline std::string export_summary_csv(const ExperimentResult& res) {
    std::ostringstream os;
    os << "env,algo,lambda,runs,diverged,mean_eval_mean,sd_eval_mean,mean_eval_std,mean_eval_cvar_0.05\n";
    for (const auto& s : res.summary) {
        os << res.config.environment << ',' << algorithm_name(res.config.algorithm) << ',' << detail::fmt17(s.lambda)
           << ',' << s.runs << ',' << s.diverged << ',' << detail::fmt17(s.mean_eval_mean) << ','
           << detail::fmt17(s.sd_eval_mean) << ',' << detail::fmt17(s.mean_eval_std) << ','
           << detail::fmt17(s.mean_eval_cvar) << '\n';
    }
    return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw Error("failed writing '" + path + "'");
}

// CSV writes <path> plus a sibling <stem>_summary.csv; JSON writes one document.
inline void export_results(const ExperimentResult& res, const std::string& path, const std::string& format) {
    if (res.runs.empty()) throw Error("no results to export");
    if (format == "json") {
        write_file(path, export_json(res));
    } else if (format == "csv") {
        write_file(path, export_csv(res));
        const auto dot = path.rfind('.');
        const auto slash = path.find_last_of('/');
        const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
        write_file((has_ext ? path.substr(0, dot) : path) + "_summary.csv", export_summary_csv(res));
    } else {
        throw ConfigError("format must be csv or json");
    }
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config '" + path + "'");
    Json j;
    try {
        j = Json::parse(f);
    } catch (const Json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return ExperimentConfig::from_json(j);
}

}  // namespace mvpg
