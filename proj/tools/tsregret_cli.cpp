#include <iostream>

#include <CLI11.hpp>

#include "tsregret/experiment.hpp"

int main(int argc, char** argv) {
    tsregret::ExperimentConfig cfg;
    CLI::App app{"Thompson sampling regret experiments on parametrized MDPs"};
    app.set_version_flag("--version", std::string(tsregret::version));
    app.add_option("command", cfg.command, "solve | simulate | regret | decompose | learn-curve | bound-check | check-assumptions")
        ->required()
        ->check(CLI::IsMember(tsregret::experiment_commands()));
    app.add_option("--scenario", cfg.scenario, "built-in name (example1, example2, example3) or JSON file")
        ->capture_default_str();
    app.add_option("--horizon", cfg.horizon, "periods to simulate")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--runs", cfg.runs, "Monte-Carlo runs")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "base seed")->capture_default_str();
    app.add_option("--n", cfg.n_values, "periods n at which regret is measured, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--beta-override", cfg.beta_override, "replace the scenario's discount factor");
    app.add_flag("--condition-first-sample-wrong", cfg.condition_first_sample_wrong,
                 "keep only runs whose first sampled parameter is wrong");
    app.add_option("--output-dir", cfg.output_dir, "directory for CSV/JSON outputs")->capture_default_str();
    app.add_option("--eps-tail", cfg.eps_tail, "truncation error allowed on infinite discounted sums")->capture_default_str();
    app.add_option("--policy", cfg.policy, "oracle | thompson | fixed:<control>")->capture_default_str();
    app.add_flag("--per-run", cfg.per_run, "simulate: also write one CSV row per run and period");
    app.add_option("--threads", cfg.threads, "worker threads (0 = hardware concurrency)")->capture_default_str();
    app.add_flag("--strict", cfg.strict, "exit 3 when a check fails");
    app.add_flag("--force", cfg.force, "overwrite existing outputs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : tsregret::exit_code::usage;
    }
    return tsregret::run_experiment(cfg, std::cerr);
}
