#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tsregret/assumptions.hpp"
#include "tsregret/model.hpp"
#include "tsregret/parallel.hpp"
#include "tsregret/planner.hpp"
#include "tsregret/thompson.hpp"

namespace tsregret {

// ---------------------------------------------------------------------------
// Monte-Carlo plumbing

namespace detail {

/// Pairwise (cascade) summation: error grows with log n rather than n, and
/// the result depends only on the order of `v`, never on scheduling.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace detail

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;

    /// Sample mean and standard error (n - 1 denominator; zero error for n = 1).
    static MCEstimate from(std::span<const double> samples) {
        if (samples.empty()) throw ModelError("an estimate needs at least one sample");
        const double n = static_cast<double>(samples.size());
        const double mean = detail::pairwise_sum(samples) / n;
        if (samples.size() == 1) return {mean, 0.0, 1};
        std::vector<double> sq(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = (samples[i] - mean) * (samples[i] - mean);
        const double var = detail::pairwise_sum(sq) / (n - 1.0);
        return {mean, std::sqrt(var / n), samples.size()};
    }
};

/// sqrt of the summed squared standard errors.
inline double combined_std_error(std::initializer_list<MCEstimate> estimates) {
    double v = 0.0;
    for (const auto& e : estimates) v += e.std_error * e.std_error;
    return std::sqrt(v);
}

/// sum_{t=from}^{T-1} beta^(t-from) r_t over the recorded steps.
inline double discounted_return(const Trajectory& traj, std::size_t from_n, double beta) {
    if (from_n >= traj.size()) throw ModelError("discounted_return: start index is past the end of the trajectory");
    double g = 0.0;
    double w = 1.0;
    for (std::size_t t = from_n; t < traj.size(); ++t) {
        g += w * traj.steps[t].reward;
        w *= beta;
    }
    return g;
}

/// Smallest T >= 1 with beta^T M / (1 - beta) < eps: truncating an infinite
/// discounted sum after T terms then misses less than eps.
inline std::size_t horizon_for(double beta, double reward_bound, double eps) {
    if (!(eps > 0.0)) throw ModelError("horizon_for: eps must be positive");
    if (!(beta >= 0.0 && beta < 1.0)) throw ModelError("horizon_for: beta must lie in [0, 1)");
    const double scale = reward_bound / (1.0 - beta);
    std::size_t t = 1;
    double tail = beta * scale;
    while (!(tail < eps)) {
        ++t;
        tail *= beta;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Reports

struct EstimatorConfig {
    std::size_t runs = 1000;
    std::uint64_t seed = 0;
    /// Keep only runs whose period-0 sample is not the true parameter.
    bool condition_first_sample_wrong = false;
    /// Truncation error allowed on every infinite discounted sum.
    double eps_tail = 1e-6;
    /// Policy whose regret is measured; the oracle is always the reference.
    PolicyKind policy = Thompson{};
    unsigned threads = 0;
};

/**
 * Regret components at period n, all in period-n units:
 *
 *   total = (nu(x0) - V(0)) beta^-n = finite_time + state + residual
 *
 * `residual_td` estimates `residual` independently through the discounted
 * sum of temporal-difference errors. Every infinite sum is truncated so that
 * the omitted tail is below the configured eps.
 */
struct RegretReport {
    std::size_t n = 0;
    MCEstimate finite_time;
    MCEstimate state;
    MCEstimate residual;
    MCEstimate total;
    MCEstimate residual_td;

    [[nodiscard]] double identity_gap() const { return finite_time.mean + state.mean + residual.mean - total.mean; }
    [[nodiscard]] double identity_std_error() const {
        return combined_std_error({finite_time, state, residual, total});
    }
};

/// Mean posterior error E[1 - pi_t(theta)] per period and its log-linear fit.
struct LearningCurve {
    std::vector<std::size_t> periods;
    std::vector<double> error;
    std::vector<double> std_error;
    double fitted_a = 0.0;
    double fitted_b = 0.0;
    bool fit_ok = false;
    std::size_t fit_points = 0;

    [[nodiscard]] double fitted(double t) const { return fitted_a * std::exp(-fitted_b * t); }
};

struct BoundCheck {
    struct Entry {
        std::size_t n = 0;
        double residual = 0.0;
        double std_error = 0.0;
        double bound = 0.0;
        bool pass = false;
    };
    std::vector<Entry> entries;
    std::vector<std::size_t> failing_periods;

    [[nodiscard]] bool all_pass() const { return failing_periods.empty(); }
};

struct LearningDiagnostic {
    double fraction = 0.0;
    double min_terminal_belief = 1.0;
    std::size_t runs = 0;
    /// Whether the scenario meets the positivity/separation conditions.
    bool assumptions_satisfied = false;
    std::vector<std::string> violations;
};

/// Mean temporal-difference error at period t over the runs whose sample was wrong.
struct WrongSampleTd {
    std::size_t t = 0;
    std::optional<MCEstimate> phi;
};

/**
 * Least-squares fit of log(error_t) = log a - b t over the periods whose
 * error exceeds `floor`. Needs at least five usable points.
 */
inline void fit_exponential(LearningCurve& curve, double floor = 1e-10) {
    std::vector<double> ts;
    std::vector<double> ys;
    for (std::size_t i = 0; i < curve.periods.size(); ++i) {
        if (curve.error[i] > floor) {
            ts.push_back(static_cast<double>(curve.periods[i]));
            ys.push_back(std::log(curve.error[i]));
        }
    }
    curve.fit_points = ts.size();
    curve.fit_ok = false;
    if (ts.size() < 5) return;
    const double n = static_cast<double>(ts.size());
    const double mt = detail::pairwise_sum(ts) / n;
    const double my = detail::pairwise_sum(ys) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        sxy += (ts[i] - mt) * (ys[i] - my);
        sxx += (ts[i] - mt) * (ts[i] - mt);
    }
    if (sxx <= 0.0) return;
    const double slope = sxy / sxx;
    curve.fitted_b = -slope;
    curve.fitted_a = std::exp(my - slope * mt);
    curve.fit_ok = true;
}

/**
 * Residual regret bound check: R(n) <= 2 M (1 + beta) a e^{-b n} / (1 - beta)^2
 * plus three standard errors, with (a, b) fitted from a measured learning
 * curve. This checks the shape of the bound empirically; the constants are not
 * the analytic ones.
 */
inline BoundCheck check_proposition1(const Scenario& s, const LearningCurve& curve, std::span<const RegretReport> reports) {
    if (!curve.fit_ok) throw ModelError("bound check needs a learning curve with a successful fit");
    const double beta = s.beta();
    const double scale = 2.0 * reward_bound(s) * (1.0 + beta) / ((1.0 - beta) * (1.0 - beta));
    BoundCheck check;
    for (const auto& r : reports) {
        BoundCheck::Entry e;
        e.n = r.n;
        e.residual = r.residual.mean;
        e.std_error = r.residual.std_error;
        e.bound = scale * curve.fitted(static_cast<double>(r.n));
        e.pass = e.residual <= e.bound + 3.0 * e.std_error;
        if (!e.pass) check.failing_periods.push_back(r.n);
        check.entries.push_back(e);
    }
    return check;
}

// ---------------------------------------------------------------------------
// Estimators

/**
 * Monte-Carlo estimators of the regret quantities of one scenario.
 *
 * Run i of every estimator is keyed by (seed, i). The measured policy and the
 * oracle share the reward/transition streams of each run (common random
 * numbers), which pairs their differences run by run.
 */
class RegretLab {
public:
    explicit RegretLab(Scenario s, double tol = default_solver_tolerance)
        : scenario_(std::move(s)),
          plan_(scenario_, tol),
          bound_(tsregret::reward_bound(scenario_)),
          phi_(td_error_table(scenario_, plan_, scenario_.true_param())) {}

    [[nodiscard]] const Scenario& scenario() const { return scenario_; }
    [[nodiscard]] const Plan& plan() const { return plan_; }
    [[nodiscard]] double reward_bound() const { return bound_; }

    /// Steps needed past any period so the truncated tail is below eps.
    [[nodiscard]] std::size_t tail_horizon(double eps) const { return horizon_for(scenario_.beta(), bound_, eps); }

    /// nu^theta(x): optimal value under the true parameter.
    [[nodiscard]] double optimal_value(StateId x) const { return plan_.value(scenario_.true_param(), x); }

    /// phi^theta(x, u) under the true parameter.
    [[nodiscard]] double td_error(StateId x, ControlId u) const { return phi_.at(x.value * scenario_.n_controls() + u.value); }

    /// V^{kind}(n): expected discounted reward from period n onward, discounted to n.
    [[nodiscard]] MCEstimate estimate_value(const PolicyKind& kind, std::size_t n, const EstimatorConfig& cfg) const {
        require_runs(cfg, 2);
        const std::size_t horizon = n + tail_horizon(cfg.eps_tail);
        const auto cond = condition(cfg);
        const auto start = SimulationStart::from(scenario_);
        const auto values = parallel_map(cfg.runs, cfg.threads, [&](std::size_t i) {
            const auto acc = accepted_streams(scenario_, kind, cfg.seed, i, cond, start);
            return discounted_return(simulate(scenario_, plan_, kind, horizon, acc.streams, start), n, scenario_.beta());
        });
        return MCEstimate::from(values);
    }

    /// All components at every requested n, from one set of paired runs.
    [[nodiscard]] std::vector<RegretReport> decompose(std::span<const std::size_t> n_values, const EstimatorConfig& cfg) const {
        require_runs(cfg, 2);
        if (n_values.empty()) return {};
        const std::size_t n_max = *std::max_element(n_values.begin(), n_values.end());
        const std::size_t horizon = n_max + tail_horizon(cfg.eps_tail);
        const double beta = scenario_.beta();
        const double nu0 = optimal_value(scenario_.initial_state());
        const auto cond = condition(cfg);
        const auto start = SimulationStart::from(scenario_);
        const std::size_t k = n_values.size();

        // Per run: 5 components for each requested n.
        const auto per_run = parallel_map(cfg.runs, cfg.threads, [&](std::size_t i) {
            const auto acc = accepted_streams(scenario_, cfg.policy, cfg.seed, i, cond, start);
            const auto ts = simulate(scenario_, plan_, cfg.policy, horizon, acc.streams, start);
            const auto oracle = simulate(scenario_, plan_, Oracle{}, horizon, acc.streams, start);
            std::vector<double> out(5 * k);
            for (std::size_t j = 0; j < k; ++j) {
                const std::size_t n = n_values[j];
                const double scale = std::pow(beta, -static_cast<double>(n));
                const double oracle_head = head_return(oracle, n, beta);
                const double ts_head = head_return(ts, n, beta);
                const double ts_tail = discounted_return(ts, n, beta);
                const double nu_oracle_n = optimal_value(state_at(oracle, n));
                const double nu_ts_n = optimal_value(state_at(ts, n));
                out[5 * j + 0] = (oracle_head - ts_head) * scale;
                out[5 * j + 1] = nu_oracle_n - nu_ts_n;
                out[5 * j + 2] = nu_ts_n - ts_tail;
                out[5 * j + 3] = nu0 * scale - ts_head * scale - ts_tail;
                out[5 * j + 4] = -discounted_td(ts, n, beta);
            }
            return out;
        });

        std::vector<RegretReport> reports(k);
        std::vector<double> column(cfg.runs);
        auto estimate = [&](std::size_t c) {
            for (std::size_t i = 0; i < cfg.runs; ++i) column[i] = per_run[i][c];
            return MCEstimate::from(column);
        };
        for (std::size_t j = 0; j < k; ++j) {
            reports[j].n = n_values[j];
            reports[j].finite_time = estimate(5 * j + 0);
            reports[j].state = estimate(5 * j + 1);
            reports[j].residual = estimate(5 * j + 2);
            reports[j].total = estimate(5 * j + 3);
            reports[j].residual_td = estimate(5 * j + 4);
        }
        return reports;
    }

    /// (oracle - policy) discounted reward over periods 0..n-1, in period-n units.
    [[nodiscard]] MCEstimate expected_finite_regret(std::size_t n, const EstimatorConfig& cfg) const {
        if (n == 0) throw ModelError("finite-time regret needs n >= 1");
        return single(n, cfg).finite_time;
    }

    /// E_oracle[nu(X_n)] - E_policy[nu(X_n)].
    [[nodiscard]] MCEstimate expected_state_regret(std::size_t n, const EstimatorConfig& cfg) const {
        return single(n, cfg).state;
    }

    /// E_policy[nu(X_n)] - V_policy(n), estimated run by run.
    [[nodiscard]] MCEstimate expected_residual_regret_mc(std::size_t n, const EstimatorConfig& cfg) const {
        return single(n, cfg).residual;
    }

    /// -sum_{t >= n} beta^(t-n) E[phi(X_t, U_t)].
    [[nodiscard]] MCEstimate expected_residual_regret_td(std::size_t n, const EstimatorConfig& cfg) const {
        return single(n, cfg).residual_td;
    }

    /// Per-period mean of 1 - pi_t(theta | H_t), t = 0..horizon, with an exponential fit.
    [[nodiscard]] LearningCurve posterior_error_curve(std::size_t horizon, const EstimatorConfig& cfg) const {
        require_runs(cfg, 10);
        const auto cond = condition(cfg);
        const auto start = SimulationStart::from(scenario_);
        const ParamId theta = scenario_.true_param();
        const auto per_run = parallel_map(cfg.runs, cfg.threads, [&](std::size_t i) {
            const auto acc = accepted_streams(scenario_, cfg.policy, cfg.seed, i, cond, start);
            const auto traj = simulate(scenario_, plan_, cfg.policy, horizon, acc.streams, start);
            std::vector<double> err(horizon + 1);
            for (std::size_t t = 0; t <= horizon; ++t) err[t] = std::clamp(1.0 - traj.beliefs[t][theta], 0.0, 1.0);
            return err;
        });
        LearningCurve curve;
        std::vector<double> column(cfg.runs);
        for (std::size_t t = 0; t <= horizon; ++t) {
            for (std::size_t i = 0; i < cfg.runs; ++i) column[i] = per_run[i][t];
            const auto e = MCEstimate::from(column);
            curve.periods.push_back(t);
            curve.error.push_back(std::clamp(e.mean, 0.0, 1.0));
            curve.std_error.push_back(e.std_error);
        }
        fit_exponential(curve);
        return curve;
    }

    /**
     * Residual regret conditioned on a realized prefix H_n: nu(X_n) minus the
     * mean discounted continuation return of the policy restarted at
     * (X_n, pi_n). The posterior depends on the history only through the
     * likelihood, so (X_n, pi_n) carries everything the continuation needs.
     */
    [[nodiscard]] MCEstimate probabilistic_residual_regret(const Trajectory& prefix, std::size_t inner_runs,
                                                           std::uint64_t seed, double eps_tail = 1e-6,
                                                           const PolicyKind& kind = Thompson{}) const {
        if (inner_runs < 2) throw ModelError("probabilistic residual regret needs at least two inner runs");
        const SimulationStart start{prefix.terminal_state, prefix.beliefs.back(), prefix.start_period + prefix.size()};
        const std::size_t horizon = tail_horizon(eps_tail);
        const double nu = optimal_value(start.state);
        std::vector<double> gaps(inner_runs);
        for (std::size_t j = 0; j < inner_runs; ++j) {
            const auto cont = simulate(scenario_, plan_, kind, horizon, RunStreams(seed, j), start);
            gaps[j] = nu - discounted_return(cont, 0, scenario_.beta());
        }
        return MCEstimate::from(gaps);
    }

    /// Fraction of runs whose posterior on the true parameter exceeds 1 - eps after `horizon` periods.
    [[nodiscard]] LearningDiagnostic complete_learning_diagnostic(std::size_t horizon, double eps,
                                                                  const EstimatorConfig& cfg) const {
        if (!(eps > 0.0 && eps < 1.0)) throw ModelError("complete-learning eps must lie in (0, 1)");
        require_runs(cfg, 1);
        const auto cond = condition(cfg);
        const auto start = SimulationStart::from(scenario_);
        const ParamId theta = scenario_.true_param();
        const auto terminal = parallel_map(cfg.runs, cfg.threads, [&](std::size_t i) {
            const auto acc = accepted_streams(scenario_, cfg.policy, cfg.seed, i, cond, start);
            return simulate(scenario_, plan_, cfg.policy, horizon, acc.streams, start).beliefs.back()[theta];
        });
        LearningDiagnostic d;
        d.runs = cfg.runs;
        std::size_t learned = 0;
        for (double b : terminal) {
            if (b > 1.0 - eps) ++learned;
            d.min_terminal_belief = std::min(d.min_terminal_belief, b);
        }
        d.fraction = static_cast<double>(learned) / static_cast<double>(cfg.runs);
        const auto report = check_assumption2(scenario_);
        d.assumptions_satisfied = report.satisfied;
        d.violations = report.violations;
        return d;
    }

    /// Mean phi^theta(X_t, U_t) over the runs with Theta_t != theta, t = 0..horizon-1.
    [[nodiscard]] std::vector<WrongSampleTd> wrong_sample_td_profile(std::size_t horizon, const EstimatorConfig& cfg) const {
        require_runs(cfg, 1);
        const auto cond = condition(cfg);
        const auto start = SimulationStart::from(scenario_);
        const ParamId theta = scenario_.true_param();
        const double nan = std::nan("");
        const auto per_run = parallel_map(cfg.runs, cfg.threads, [&](std::size_t i) {
            const auto acc = accepted_streams(scenario_, cfg.policy, cfg.seed, i, cond, start);
            const auto traj = simulate(scenario_, plan_, cfg.policy, horizon, acc.streams, start);
            std::vector<double> phi(horizon, nan);
            for (std::size_t t = 0; t < horizon; ++t) {
                const auto& st = traj.steps[t];
                if (st.sample != theta) phi[t] = td_error(st.state, st.control);
            }
            return phi;
        });
        std::vector<WrongSampleTd> profile(horizon);
        std::vector<double> column;
        for (std::size_t t = 0; t < horizon; ++t) {
            column.clear();
            for (const auto& run : per_run)
                if (!std::isnan(run[t])) column.push_back(run[t]);
            profile[t].t = t;
            if (!column.empty()) profile[t].phi = MCEstimate::from(column);
        }
        return profile;
    }

private:
    static void require_runs(const EstimatorConfig& cfg, std::size_t min) {
        if (cfg.runs < min) throw ModelError("estimator needs at least " + std::to_string(min) + " runs");
    }

    static FirstSampleCondition condition(const EstimatorConfig& cfg) {
        return cfg.condition_first_sample_wrong ? first_sample_wrong() : FirstSampleCondition{};
    }

    static StateId state_at(const Trajectory& traj, std::size_t n) {
        return n < traj.size() ? traj.steps[n].state : traj.terminal_state;
    }

    /// sum_{t<n} beta^t r_t
    static double head_return(const Trajectory& traj, std::size_t n, double beta) {
        double g = 0.0;
        double w = 1.0;
        for (std::size_t t = 0; t < n && t < traj.size(); ++t) {
            g += w * traj.steps[t].reward;
            w *= beta;
        }
        return g;
    }

    /// sum_{t>=n} beta^(t-n) phi(X_t, U_t)
    [[nodiscard]] double discounted_td(const Trajectory& traj, std::size_t n, double beta) const {
        double g = 0.0;
        double w = 1.0;
        for (std::size_t t = n; t < traj.size(); ++t) {
            g += w * td_error(traj.steps[t].state, traj.steps[t].control);
            w *= beta;
        }
        return g;
    }

    [[nodiscard]] RegretReport single(std::size_t n, const EstimatorConfig& cfg) const {
        const std::size_t ns[] = {n};
        return decompose(ns, cfg).front();
    }

    Scenario scenario_;
    Plan plan_;
    double bound_;
    std::vector<double> phi_;
};

}  // namespace tsregret
