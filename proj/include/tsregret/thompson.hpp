#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tsregret/model.hpp"
#include "tsregret/parallel.hpp"
#include "tsregret/planner.hpp"
#include "tsregret/random.hpp"

namespace tsregret {

// ---------------------------------------------------------------------------
// Policies

/// Plays the optimal policy of the true parameter.
struct Oracle {};
/// Samples a parameter from the posterior and plays its optimal control.
struct Thompson {};
/// Always plays one control.
struct FixedControl {
    ControlId control;
};

using PolicyKind = std::variant<Oracle, Thompson, FixedControl>;

inline std::string describe(const Scenario& s, const PolicyKind& kind) {
    return std::visit(detail::overloaded{
                          [](const Oracle&) { return std::string("oracle"); },
                          [](const Thompson&) { return std::string("thompson"); },
                          [&](const FixedControl& f) { return "fixed:" + s.control_name(f.control); },
                      },
                      kind);
}

// ---------------------------------------------------------------------------
// Histories

struct Step {
    StateId state;
    ParamId sample;
    ControlId control;
    double reward = 0.0;

    friend bool operator==(const Step&, const Step&) = default;
};

/**
 * One realized history. `beliefs[t]` is the posterior held at the start of
 * period `start_period + t`, before that period's sample is drawn, so there
 * is one more belief than there are steps.
 */
struct Trajectory {
    std::vector<Step> steps;
    std::vector<Belief> beliefs;
    StateId terminal_state;
    std::size_t start_period = 0;

    [[nodiscard]] std::size_t size() const { return steps.size(); }
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

// ---------------------------------------------------------------------------
// Posterior and decision rule

/**
 * One Bayes step: belief'(g) is proportional to
 * belief(g) f^g(r | x, u) q^g(y | x, u), computed in log space.
 *
 * The likelihood of a history factorizes over periods, so folding this step
 * over a history reproduces the batch posterior exactly.
 */
inline Belief posterior_step(const Scenario& s, const Belief& belief, StateId x, ControlId u, double r, StateId y) {
    s.require_admissible(x, u);
    if (y.value >= s.n_states()) throw ModelError("next state index out of range");
    std::vector<double> log_w(s.n_params());
    for (std::size_t g = 0; g < s.n_params(); ++g) {
        const ParamId pg{g};
        const double prior = belief[pg];
        if (prior <= 0.0) {
            log_w[g] = -std::numeric_limits<double>::infinity();
            continue;
        }
        log_w[g] = std::log(prior) + log_density(s.reward(pg, x, u), r) + log_transition_density(s, pg, x, u, y);
    }
    return Belief::from_log_weights(log_w);
}

/// Draws a parameter index from the belief.
inline ParamId sample_param(const Belief& belief, RandomStream& rng) {
    return ParamId{detail::categorical_draw(belief.probs(), rng.uniform01())};
}

/// Thompson decision: draw Theta ~ belief, play the optimal control of Theta at x.
inline std::pair<ParamId, ControlId> ts_choose(const Belief& belief, const Plan& plan, StateId x, RandomStream& rng) {
    const ParamId theta = sample_param(belief, rng);
    return {theta, plan.control(theta, x)};
}

/// Where a simulation starts: state, belief and absolute period index.
struct SimulationStart {
    StateId state;
    Belief belief;
    std::size_t period = 0;

    static SimulationStart from(const Scenario& s) { return {s.initial_state(), s.prior(), 0}; }
};

/// The parameter a policy records for period `period`. Non-oracle policies
/// draw it from the belief (FixedControl only records it).
inline ParamId period_sample(const Scenario& s, const PolicyKind& kind, const Belief& belief, const RunStreams& streams,
                             std::size_t period) {
    if (std::holds_alternative<Oracle>(kind)) return s.true_param();
    auto rng = streams.at(period, DrawKind::sample);
    return sample_param(belief, rng);
}

/**
 * Generates one history in the order: observe x_t, hold belief pi_t, sample
 * Theta_t, choose u_t, draw r_t ~ f^theta(. | x_t, u_t), draw
 * x_{t+1} ~ q^theta(. | x_t, u_t), update the belief. Nature always uses the
 * scenario's true parameter. Every policy updates the belief.
 *
 * Draws for period t come from `streams.at(t, kind)`, so two policies run on
 * the same streams share their reward and transition noise.
 */
inline Trajectory simulate(const Scenario& s, const Plan& plan, const PolicyKind& kind, std::size_t horizon,
                           const RunStreams& streams, const SimulationStart& start) {
    if (horizon == 0) throw ModelError("horizon must be at least 1");
    if (plan.n_params() != s.n_params()) throw ModelError("plan does not match the scenario");
    const ParamId truth = s.true_param();

    Trajectory traj;
    traj.start_period = start.period;
    traj.steps.reserve(horizon);
    traj.beliefs.reserve(horizon + 1);
    traj.beliefs.push_back(start.belief);

    StateId x = start.state;
    for (std::size_t k = 0; k < horizon; ++k) {
        const std::size_t t = start.period + k;
        const Belief& belief = traj.beliefs.back();
        const ParamId sample = period_sample(s, kind, belief, streams, t);
        const ControlId u = std::visit(detail::overloaded{
                                           [&](const Oracle&) { return plan.control(truth, x); },
                                           [&](const Thompson&) { return plan.control(sample, x); },
                                           [](const FixedControl& f) { return f.control; },
                                       },
                                       kind);
        auto reward_rng = streams.at(t, DrawKind::reward);
        const double r = sample_reward(s, truth, x, u, reward_rng);
        auto transition_rng = streams.at(t, DrawKind::transition);
        const StateId y = sample_transition(s, truth, x, u, transition_rng);

        traj.steps.push_back({x, sample, u, r});
        traj.beliefs.push_back(posterior_step(s, belief, x, u, r, y));
        x = y;
    }
    traj.terminal_state = x;
    return traj;
}

inline Trajectory simulate(const Scenario& s, const Plan& plan, const PolicyKind& kind, std::size_t horizon,
                           const RunStreams& streams) {
    return simulate(s, plan, kind, horizon, streams, SimulationStart::from(s));
}

// ---------------------------------------------------------------------------
// Batches

/// Predicate on the period-0 sample of a run.
using FirstSampleCondition = std::function<bool(const Scenario&, ParamId)>;

/// Accepts runs whose first sampled parameter differs from the true one.
inline FirstSampleCondition first_sample_wrong() {
    return [](const Scenario& s, ParamId sample) { return sample != s.true_param(); };
}

inline constexpr std::size_t max_attempts_per_run = 10000;

/// Streams of run `run` after rejection on the first sample.
struct AcceptedStreams {
    RunStreams streams;
    std::size_t attempts;
};

/**
 * Streams for run `run`: keyed by (seed, run) when unconditioned; otherwise
 * attempts (seed, run, a) for a = 0, 1, ... until the period-0 sample
 * satisfies the condition. Throws after `max_attempts_per_run` rejections.
 */
inline AcceptedStreams accepted_streams(const Scenario& s, const PolicyKind& kind, std::uint64_t seed, std::size_t run,
                                        const FirstSampleCondition& condition, const SimulationStart& start) {
    const RunStreams base(seed, run);
    if (!condition) return {base, 1};
    for (std::size_t a = 0; a < max_attempts_per_run; ++a) {
        const RunStreams candidate = base.child(a);
        if (condition(s, period_sample(s, kind, start.belief, candidate, start.period))) return {candidate, a + 1};
    }
    throw ModelError("first-sample condition was not met in " + std::to_string(max_attempts_per_run) +
                     " attempts; it is probably unsatisfiable under this prior and policy");
}

struct BatchResult {
    std::vector<Trajectory> runs;
    /// Total attempts including rejected ones; equals runs.size() without a condition.
    std::size_t attempts = 0;

    [[nodiscard]] double acceptance_rate() const {
        return attempts == 0 ? 0.0 : static_cast<double>(runs.size()) / static_cast<double>(attempts);
    }
};

/// n_runs independent histories; run i depends only on (seed, i).
inline BatchResult run_batch(const Scenario& s, const Plan& plan, const PolicyKind& kind, std::size_t horizon,
                             std::size_t n_runs, std::uint64_t seed, const FirstSampleCondition& condition = {},
                             unsigned threads = 0) {
    if (n_runs == 0) throw ModelError("a batch needs at least one run");
    const auto start = SimulationStart::from(s);
    auto results = parallel_map(n_runs, threads, [&](std::size_t i) {
        const auto acc = accepted_streams(s, kind, seed, i, condition, start);
        return std::pair{simulate(s, plan, kind, horizon, acc.streams, start), acc.attempts};
    });
    BatchResult batch;
    batch.runs.reserve(n_runs);
    for (auto& [traj, attempts] : results) {
        batch.runs.push_back(std::move(traj));
        batch.attempts += attempts;
    }
    return batch;
}

}  // namespace tsregret
