#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

#include "mvpg/bound.hpp"
#include "mvpg/harness.hpp"
#include "mvpg/oracle.hpp"

namespace {

using namespace mvpg;

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDiverged = 2;
constexpr int kCheckFailed = 3;

struct Globals {
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
};

ExperimentConfig apply_globals(ExperimentConfig cfg, const Globals& g) {
    if (g.seed) cfg.seeds = {*g.seed};
    if (!g.out.empty()) cfg.output = g.out;
    if (!g.format.empty()) cfg.format = g.format;
    cfg.validate();
    return cfg;
}

void print_summary(const ExperimentResult& res) {
    std::printf("%-10s %-6s %5s %9s %12s %12s %12s\n", "lambda", "algo", "runs", "diverged", "eval_mean", "eval_std",
                "cvar_0.05");
    for (const auto& s : res.summary)
        std::printf("%-10.6g %-6s %5llu %9llu %12.6g %12.6g %12.6g\n", s.lambda,
                    std::string(algorithm_name(res.config.algorithm)).c_str(), static_cast<unsigned long long>(s.runs),
                    static_cast<unsigned long long>(s.diverged), s.mean_eval_mean, s.mean_eval_std, s.mean_eval_cvar);
}

int execute(ExperimentConfig cfg) {
    const auto res = run_experiment(cfg);
    print_summary(res);
    for (const auto& r : res.runs)
        if (r.diverged)
            std::fprintf(stderr, "lambda=%g seed=%llu diverged at episode %llu: %s\n", r.lambda,
                         static_cast<unsigned long long>(r.seed), static_cast<unsigned long long>(r.diverged_at),
                         r.error.c_str());
    if (!cfg.output.empty()) {
        export_results(res, cfg.output, cfg.format);
        std::printf("wrote %s\n", cfg.output.c_str());
    }
    return res.any_diverged() ? kDiverged : kOk;
}

template <class E, class P>
int oracle_report(const E& e, const P& pol, const ExperimentConfig& cfg, std::uint64_t samples,
                  std::uint64_t max_traj) {
    const double lambda = cfg.lambda_grid.front();
    const Vector theta(pol.dimension(), 0.0);
    EnumerationOptions opts;
    opts.max_trajectories = max_traj;
    ExactExpectation info;
    const auto mom = exact_moments(e, pol, theta, &info, opts);
    const double ystar = optimal_dual(mom, lambda);
    std::printf("trajectories %llu, total probability %.17g\n", static_cast<unsigned long long>(info.trajectories),
                info.total_probability);
    std::printf("J %.12g  M %.12g  Var %.12g\n", mom.j, mom.m, mom.variance());
    std::printf("objective %.12g  F_lambda %.12g  y* %.12g  surrogate(y*) %.12g\n",
                mean_variance_objective(mom, lambda, cfg.zeta), f_lambda(mom, lambda), ystar,
                surrogate_value(mom, ystar, lambda));

    bool ok = true;
    for (double y : {cfg.initial_y, ystar}) {
        RngStream env_rng(cfg.seeds.front(), Stream::Environment);
        RngStream pol_rng(cfg.seeds.front(), Stream::Policy);
        const auto rep = estimator_bias_report(e, pol, theta, y, lambda, samples, env_rng, pol_rng, opts);
        double worst = rep.stderr_y > 0 ? std::abs(rep.mean_error.delta_y) / rep.stderr_y : 0.0;
        for (std::size_t i = 0; i < theta.size(); ++i)
            if (rep.stderr_theta[i] > 0) worst = std::max(worst, std::abs(rep.mean_error.delta_theta[i]) / rep.stderr_theta[i]);
        std::printf("y=%.6g: %llu samples, dual-block error %.3g (se %.3g), worst |error|/se %.3f, E|dy|^2 %.4g, "
                    "E|dtheta|^2 %.4g\n",
                    y, static_cast<unsigned long long>(samples), rep.mean_error.delta_y, rep.stderr_y, worst,
                    rep.second_moment_y, rep.second_moment_theta);
        ok = ok && worst <= 3.0;
    }
    std::printf("%s\n", ok ? "oracle-check: PASS" : "oracle-check: FAIL (Monte Carlo mean outside 3 standard errors)");
    return ok ? kOk : kCheckFailed;
}

int oracle_check(const ExperimentConfig& cfg, std::uint64_t samples, std::uint64_t max_traj) {
    return with_environment(cfg, [&](const auto& e, const auto& pol) -> int {
        using Env = std::decay_t<decltype(e)>;
        if constexpr (EnumerableEnvironment<Env>)
            return oracle_report(e, pol, cfg, samples, max_traj);
        else
            throw ConfigError("environment '" + cfg.environment + "' cannot be enumerated");
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mean-variance policy gradient toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    Globals g;
    app.add_option("--seed", g.seed, "Run a single seed instead of the configured list");
    app.add_option("--out", g.out, "Output file (overrides config 'output')");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Train and evaluate the first lambda of the config");
    run_cmd->add_option("config", config_path, "JSON config file")->required();
    auto* sweep_cmd = app.add_subcommand("sweep", "Run every (lambda, seed) cell of the config");
    sweep_cmd->add_option("config", config_path, "JSON config file")->required();

    std::uint64_t samples = 100000, max_traj = 1000000;
    auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare estimators against exact enumeration at theta = 0");
    oracle_cmd->add_option("config", config_path, "JSON config file")->required();
    oracle_cmd->add_option("--samples", samples, "Monte Carlo episodes")->capture_default_str();
    oracle_cmd->add_option("--max-trajectories", max_traj, "Enumeration cap")->capture_default_str();

    BoundInputs b;
    std::optional<double> beta_min;
    auto* bound_cmd = app.add_subcommand("bound", "Evaluate the finite-sample stationarity bound");
    bound_cmd->add_option("--L", b.lipschitz, "Lipschitz constant")->required();
    bound_cmd->add_option("--G", b.grad_bound, "Gradient bound")->required();
    bound_cmd->add_option("--sigma", b.sigma, "Noise level")->required();
    bound_cmd->add_option("--A", b.bias_const, "Bias constant")->required();
    bound_cmd->add_option("--beta", b.beta_max, "Stepsize (beta_max)")->required();
    bound_cmd->add_option("--beta-min", beta_min, "Smallest stepsize (defaults to --beta)");
    bound_cmd->add_option("--N", b.episodes, "Episodes")->required();
    bound_cmd->add_option("--fgap", b.f_gap, "Optimality gap f* - f(x_1)")->required();
    bound_cmd->add_option("--blocks", b.blocks, "Number of blocks")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    try {
        if (*bound_cmd) {
            b.beta_min = beta_min.value_or(b.beta_max);
            std::printf("C = %.17g\nbound = %.17g\n", b.blocks == 2 ? two_block_constant(b) : block_constant(b),
                        finite_sample_bound(b));
            return kOk;
        }
        auto cfg = apply_globals(load_config(config_path), g);
        if (*run_cmd) {
            cfg.lambda_grid = {cfg.lambda_grid.front()};
            if (!g.seed) cfg.seeds = {cfg.seeds.front()};
            return execute(cfg);
        }
        if (*sweep_cmd) return execute(cfg);
        if (*oracle_cmd) return oracle_check(cfg, samples, max_traj);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfigError;
    } catch (const EnumerationLimitError& e) {
        std::fprintf(stderr, "enumeration limit: %s\n", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kConfigError;
    }
    return kOk;
}
