#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsregret/assumptions.hpp"
#include "tsregret/builtins.hpp"
#include "tsregret/model.hpp"
#include "tsregret/planner.hpp"
#include "tsregret/regret_lab.hpp"
#include "tsregret/scenario_io.hpp"
#include "tsregret/thompson.hpp"
#include "tsregret/version.hpp"

namespace tsregret {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int usage = 1;
inline constexpr int invalid = 2;
inline constexpr int check_failed = 3;
}  // namespace exit_code

inline const std::vector<std::string>& experiment_commands() {
    static const std::vector<std::string> c{"solve",       "simulate",    "regret",           "decompose",
                                            "learn-curve", "bound-check", "check-assumptions"};
    return c;
}

struct ExperimentConfig {
    std::string command;
    std::string scenario = "example3";
    std::size_t horizon = 100;
    std::size_t runs = 1000;
    std::uint64_t seed = 0;
    std::vector<std::size_t> n_values{1, 5, 10, 20};
    bool condition_first_sample_wrong = false;
    std::string output_dir = ".";
    double eps_tail = 1e-6;
    std::optional<double> beta_override;
    /// "oracle", "thompson" or "fixed:<control name or index>".
    std::string policy = "thompson";
    bool per_run = false;
    bool strict = false;
    bool force = false;
    unsigned threads = 0;
};

/// Scenario that parsed but failed validation.
class ScenarioValidationError : public ModelError {
public:
    explicit ScenarioValidationError(ValidationReport r)
        : ModelError("scenario failed validation:" + joined(r)), report(std::move(r)) {}
    ValidationReport report;

private:
    static std::string joined(const ValidationReport& r) {
        std::string s;
        for (const auto& v : r.violations) s += "\n  " + v;
        return s;
    }
};

/// A built-in name or a JSON file path; the result is validated.
inline Scenario load_scenario(const std::string& source, std::optional<double> beta_override = std::nullopt) {
    Scenario s = builtins::by_name(source).value_or(Scenario{});
    if (s.n_params() == 0) s = scenario_from_file(source);
    if (beta_override) s.set_beta(*beta_override);
    auto report = validate_scenario(s);
    if (!report.ok()) throw ScenarioValidationError(std::move(report));
    return s;
}

/// Parses "oracle", "thompson" or "fixed:<u>".
inline PolicyKind parse_policy(const Scenario& s, const std::string& text) {
    if (text == "oracle") return Oracle{};
    if (text == "thompson") return Thompson{};
    const std::string prefix = "fixed:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string u = text.substr(prefix.size());
        for (std::size_t i = 0; i < s.n_controls(); ++i)
            if (s.control_name(ControlId{i}) == u) return FixedControl{ControlId{i}};
        try {
            std::size_t pos = 0;
            const auto i = std::stoul(u, &pos);
            if (pos == u.size() && i < s.n_controls()) return FixedControl{ControlId{i}};
        } catch (const std::exception&) {
        }
        throw ModelError("unknown control in policy \"" + text + "\"");
    }
    throw ModelError("unknown policy \"" + text + "\" (expected oracle, thompson or fixed:<control>)");
}

namespace exp_detail {

using json = nlohmann::json;

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path.string());
        out_ << "# manifest=manifest.json\n";
        row(header);
    }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline std::vector<std::string> outputs_for(const ExperimentConfig& cfg) {
    const std::string& c = cfg.command;
    if (c == "solve") return {"solve.csv"};
    if (c == "simulate") {
        if (cfg.per_run) return {"simulate.csv", "simulate_runs.csv"};
        return {"simulate.csv"};
    }
    if (c == "regret") return {"regret.csv", "regret_summary.json"};
    if (c == "decompose") return {"decompose.csv"};
    if (c == "learn-curve") return {"learn_curve.csv"};
    if (c == "bound-check") return {"bound_check.csv"};
    if (c == "check-assumptions") return {"entropy_matrix.csv", "assumptions.json"};
    return {};
}

inline json manifest(const ExperimentConfig& cfg, const Scenario& s, const std::vector<std::string>& outputs) {
    json m;
    m["library"] = "tsregret";
    m["version"] = version;
    m["command"] = cfg.command;
    m["config"] = {
        {"scenario", cfg.scenario},
        {"horizon", cfg.horizon},
        {"runs", cfg.runs},
        {"seed", cfg.seed},
        {"n", cfg.n_values},
        {"condition_first_sample_wrong", cfg.condition_first_sample_wrong},
        {"eps_tail", cfg.eps_tail},
        {"beta_override", cfg.beta_override ? json(*cfg.beta_override) : json(nullptr)},
        {"policy", cfg.policy},
        {"per_run", cfg.per_run},
        {"strict", cfg.strict},
    };
    m["seeds"] = {{"base", cfg.seed}, {"run_key", "(seed, run index[, rejection attempt])"}};
    m["scenario"] = scenario_to_json(s);
    m["outputs"] = outputs;
    return m;
}

inline EstimatorConfig estimator(const ExperimentConfig& cfg, const Scenario& s) {
    EstimatorConfig e;
    e.runs = cfg.runs;
    e.seed = cfg.seed;
    e.condition_first_sample_wrong = cfg.condition_first_sample_wrong;
    e.eps_tail = cfg.eps_tail;
    e.policy = parse_policy(s, cfg.policy);
    e.threads = cfg.threads;
    return e;
}

inline int solve(const ExperimentConfig&, const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
    const Plan plan(s);
    Csv csv(dir / "solve.csv", {"param", "state", "value", "control"});
    for (std::size_t p = 0; p < s.n_params(); ++p) {
        for (std::size_t x = 0; x < s.n_states(); ++x) {
            const ParamId pp{p};
            const StateId sx{x};
            csv.row({s.param_name(pp), s.state_name(sx), num(plan.value(pp, sx)), s.control_name(plan.control(pp, sx))});
        }
        log << "param " << s.param_name(ParamId{p}) << ": " << plan.solution(ParamId{p}).iterations
            << " iterations, residual " << num(plan.solution(ParamId{p}).residual) << '\n';
    }
    return exit_code::ok;
}

inline int simulate_cmd(const ExperimentConfig& cfg, const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
    const Plan plan(s);
    const PolicyKind kind = parse_policy(s, cfg.policy);
    const auto batch = run_batch(s, plan, kind, cfg.horizon, cfg.runs, cfg.seed,
                                 cfg.condition_first_sample_wrong ? first_sample_wrong() : FirstSampleCondition{},
                                 cfg.threads);
    std::vector<std::string> header{"period", "mean_reward", "reward_se"};
    for (const auto& p : s.param_names()) header.push_back("belief_" + p);
    Csv csv(dir / "simulate.csv", header);
    std::vector<double> column(batch.runs.size());
    for (std::size_t t = 0; t < cfg.horizon; ++t) {
        for (std::size_t i = 0; i < batch.runs.size(); ++i) column[i] = batch.runs[i].steps[t].reward;
        const auto r = MCEstimate::from(column);
        std::vector<std::string> row{std::to_string(t), num(r.mean), num(r.std_error)};
        for (std::size_t p = 0; p < s.n_params(); ++p) {
            for (std::size_t i = 0; i < batch.runs.size(); ++i) column[i] = batch.runs[i].beliefs[t][ParamId{p}];
            row.push_back(num(MCEstimate::from(column).mean));
        }
        csv.row(row);
    }
    if (cfg.per_run) {
        std::vector<std::string> h{"run", "period", "state", "sample", "control", "reward"};
        for (const auto& p : s.param_names()) h.push_back("belief_" + p);
        Csv runs(dir / "simulate_runs.csv", h);
        for (std::size_t i = 0; i < batch.runs.size(); ++i) {
            const auto& traj = batch.runs[i];
            for (std::size_t t = 0; t < traj.size(); ++t) {
                const auto& st = traj.steps[t];
                std::vector<std::string> row{std::to_string(i), std::to_string(t), s.state_name(st.state),
                                             s.param_name(st.sample), s.control_name(st.control), num(st.reward)};
                for (std::size_t p = 0; p < s.n_params(); ++p) row.push_back(num(traj.beliefs[t][ParamId{p}]));
                runs.row(row);
            }
        }
    }
    log << batch.runs.size() << " runs, acceptance rate " << num(batch.acceptance_rate()) << '\n';
    return exit_code::ok;
}

struct RegretChecks {
    std::vector<std::string> failures;
};

inline RegretChecks check_reports(const std::vector<RegretReport>& reports) {
    RegretChecks c;
    for (const auto& r : reports) {
        const std::string at = "n=" + std::to_string(r.n) + ": ";
        if (std::abs(r.identity_gap()) > 3.0 * r.identity_std_error())
            c.failures.push_back(at + "decomposition identity gap " + num(r.identity_gap()) + " exceeds 3 combined SE");
        if (r.residual.mean < -3.0 * r.residual.std_error)
            c.failures.push_back(at + "residual regret " + num(r.residual.mean) + " is significantly negative");
        const double se = combined_std_error({r.residual, r.residual_td});
        if (std::abs(r.residual.mean - r.residual_td.mean) > 3.0 * se)
            c.failures.push_back(at + "direct and temporal-difference residual estimates disagree");
    }
    return c;
}

inline int finish_checks(const ExperimentConfig& cfg, const std::vector<std::string>& failures, std::ostream& log) {
    for (const auto& f : failures) log << "check failed: " << f << '\n';
    if (failures.empty()) log << "all checks passed\n";
    return cfg.strict && !failures.empty() ? exit_code::check_failed : exit_code::ok;
}

inline int regret_cmd(const ExperimentConfig& cfg, const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
    const RegretLab lab(s);
    const auto reports = lab.decompose(cfg.n_values, estimator(cfg, s));
    Csv csv(dir / "regret.csv", {"n", "finite_time", "finite_time_se", "state", "state_se", "residual", "residual_se",
                                 "residual_td", "residual_td_se", "total", "total_se"});
    json summary = json::array();
    for (const auto& r : reports) {
        csv.row({std::to_string(r.n), num(r.finite_time.mean), num(r.finite_time.std_error), num(r.state.mean),
                 num(r.state.std_error), num(r.residual.mean), num(r.residual.std_error), num(r.residual_td.mean),
                 num(r.residual_td.std_error), num(r.total.mean), num(r.total.std_error)});
        const bool holds = std::abs(r.identity_gap()) <= 3.0 * r.identity_std_error();
        summary.push_back({{"n", r.n}, {"identity_gap", r.identity_gap()}, {"combined_se", r.identity_std_error()},
                           {"within_3se", holds}});
        log << "n=" << r.n << " identity gap " << num(r.identity_gap()) << " (3 SE = " << num(3.0 * r.identity_std_error())
            << ") " << (holds ? "holds" : "FAILS") << '\n';
    }
    std::ofstream(dir / "regret_summary.json") << summary.dump(2) << '\n';
    return finish_checks(cfg, check_reports(reports).failures, log);
}

inline int decompose_cmd(const ExperimentConfig& cfg, const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
    const RegretLab lab(s);
    const auto reports = lab.decompose(cfg.n_values, estimator(cfg, s));
    Csv csv(dir / "decompose.csv",
            {"n", "finite_time", "state", "residual", "sum_of_parts", "total", "gap", "combined_se", "within_3se"});
    for (const auto& r : reports) {
        const double sum = r.finite_time.mean + r.state.mean + r.residual.mean;
        const bool holds = std::abs(r.identity_gap()) <= 3.0 * r.identity_std_error();
        csv.row({std::to_string(r.n), num(r.finite_time.mean), num(r.state.mean), num(r.residual.mean), num(sum),
                 num(r.total.mean), num(r.identity_gap()), num(r.identity_std_error()), holds ? "1" : "0"});
    }
    return finish_checks(cfg, check_reports(reports).failures, log);
}

inline int learn_curve_cmd(const ExperimentConfig& cfg, const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
    const RegretLab lab(s);
    const auto curve = lab.posterior_error_curve(cfg.horizon, estimator(cfg, s));
    Csv csv(dir / "learn_curve.csv", {"t", "error", "se", "fitted_bound"});
    for (std::size_t i = 0; i < curve.periods.size(); ++i) {
        const double t = static_cast<double>(curve.periods[i]);
        csv.row({std::to_string(curve.periods[i]), num(curve.error[i]), num(curve.std_error[i]),
                 curve.fit_ok ? num(curve.fitted(t)) : "nan"});
    }
    std::vector<std::string> failures;
    if (curve.fit_ok) {
        log << "fit: a=" << num(curve.fitted_a) << " b=" << num(curve.fitted_b) << " over " << curve.fit_points << " points\n";
        if (!(curve.fitted_b > 0.0)) failures.push_back("fitted decay rate is not positive");
    } else {
        log << "fit skipped: only " << curve.fit_points << " periods with error above 1e-10\n";
        failures.push_back("exponential fit skipped");
    }
    return finish_checks(cfg, failures, log);
}

inline int bound_check_cmd(const ExperimentConfig& cfg, const Scenario& s, const std::filesystem::path& dir, std::ostream& log) {
    const RegretLab lab(s);
    const auto est = estimator(cfg, s);
    const auto curve = lab.posterior_error_curve(cfg.horizon, est);
    if (!curve.fit_ok) {
        log << "bound check needs a fitted learning curve; only " << curve.fit_points << " usable periods\n";
        return cfg.strict ? exit_code::check_failed : exit_code::ok;
    }
    const auto reports = lab.decompose(cfg.n_values, est);
    const auto check = check_proposition1(s, curve, reports);
    Csv csv(dir / "bound_check.csv", {"n", "residual", "se", "bound", "pass"});
    std::vector<std::string> failures;
    for (const auto& e : check.entries) {
        csv.row({std::to_string(e.n), num(e.residual), num(e.std_error), num(e.bound), e.pass ? "1" : "0"});
        if (!e.pass) failures.push_back("n=" + std::to_string(e.n) + ": residual regret above the fitted bound");
    }
    log << "fit: a=" << num(curve.fitted_a) << " b=" << num(curve.fitted_b) << '\n';
    return finish_checks(cfg, failures, log);
}

inline int check_assumptions_cmd(const ExperimentConfig& cfg, const Scenario& s, const std::filesystem::path& dir,
                                 std::ostream& log) {
    const auto report = check_assumption2(s);
    Csv csv(dir / "entropy_matrix.csv", {"state", "control", "true_param", "other_param", "relative_entropy", "absolutely_continuous"});
    json entries = json::array();
    for (const auto& e : report.entropy_matrix) {
        csv.row({s.state_name(e.state), s.control_name(e.control), s.param_name(s.true_param()), s.param_name(e.other),
                 num(e.entropy.value), e.entropy.absolutely_continuous ? "1" : "0"});
    }
    auto finite_or_null = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json out{
        {"scenario", s.name()},
        {"status", report.satisfied ? "satisfied" : "violated"},
        {"satisfied", report.satisfied},
        {"density_floor_reward", finite_or_null(report.density_floor_reward)},
        {"density_floor_transition", finite_or_null(report.density_floor_transition)},
        {"entropy_floor", finite_or_null(report.entropy_floor)},
        {"violations", report.violations},
    };
    std::ofstream(dir / "assumptions.json") << out.dump(2) << '\n';
    log << "assumptions " << (report.satisfied ? "satisfied" : "violated") << '\n';
    for (const auto& v : report.violations) log << "  " << v << '\n';
    return cfg.strict && !report.satisfied ? exit_code::check_failed : exit_code::ok;
}

}  // namespace exp_detail

/// Usage problems in a config, empty when it is runnable.
inline std::vector<std::string> config_errors(const ExperimentConfig& cfg) {
    std::vector<std::string> e;
    const auto& cmds = experiment_commands();
    if (std::find(cmds.begin(), cmds.end(), cfg.command) == cmds.end()) e.push_back("unknown command \"" + cfg.command + "\"");
    if (cfg.runs < 1) e.push_back("--runs must be at least 1");
    if (cfg.horizon < 1) e.push_back("--horizon must be at least 1");
    if (!(cfg.eps_tail > 0.0)) e.push_back("--eps-tail must be positive");
    if (cfg.n_values.empty() && (cfg.command == "regret" || cfg.command == "decompose" || cfg.command == "bound-check"))
        e.push_back("--n needs at least one period");
    return e;
}

/**
 * Runs one command and writes its artifacts plus manifest.json into
 * cfg.output_dir. Returns 0 on success, 1 on usage errors (including refusing
 * to overwrite without `force`), 2 when the scenario fails to load or validate,
 * and 3 when `strict` is set and a check fails.
 */
inline int run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
    namespace fs = std::filesystem;
    if (const auto errors = config_errors(cfg); !errors.empty()) {
        for (const auto& e : errors) log << "error: " << e << '\n';
        return exit_code::usage;
    }

    Scenario s;
    try {
        s = load_scenario(cfg.scenario, cfg.beta_override);
    } catch (const ModelError& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::invalid;
    }

    const fs::path dir(cfg.output_dir);
    auto outputs = exp_detail::outputs_for(cfg);
    outputs.push_back("manifest.json");
    if (!cfg.force) {
        for (const auto& f : outputs) {
            if (fs::exists(dir / f)) {
                log << "error: " << (dir / f).string() << " exists; pass --force to overwrite\n";
                return exit_code::usage;
            }
        }
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        log << "error: cannot create " << dir.string() << ": " << ec.message() << '\n';
        return exit_code::usage;
    }

    int code = exit_code::ok;
    try {
        const std::string& c = cfg.command;
        if (c == "solve") code = exp_detail::solve(cfg, s, dir, log);
        else if (c == "simulate") code = exp_detail::simulate_cmd(cfg, s, dir, log);
        else if (c == "regret") code = exp_detail::regret_cmd(cfg, s, dir, log);
        else if (c == "decompose") code = exp_detail::decompose_cmd(cfg, s, dir, log);
        else if (c == "learn-curve") code = exp_detail::learn_curve_cmd(cfg, s, dir, log);
        else if (c == "bound-check") code = exp_detail::bound_check_cmd(cfg, s, dir, log);
        else code = exp_detail::check_assumptions_cmd(cfg, s, dir, log);
    } catch (const ModelError& e) {
        log << "error: " << e.what() << '\n';
        return exit_code::usage;
    }
    std::ofstream(dir / "manifest.json") << exp_detail::manifest(cfg, s, outputs).dump(2) << '\n';
    return code;
}

}  // namespace tsregret
