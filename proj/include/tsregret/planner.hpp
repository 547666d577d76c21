#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tsregret/model.hpp"

namespace tsregret {

inline constexpr double default_solver_tolerance = 1e-9;

namespace detail {

/// Expected one-step rewards r^p(x,u), laid out [x][u]; NaN for inadmissible pairs.
inline std::vector<double> reward_table(const Scenario& s, ParamId p) {
    std::vector<double> r(s.n_states() * s.n_controls(), std::nan(""));
    for (std::size_t x = 0; x < s.n_states(); ++x)
        for (const ControlId u : s.admissible(StateId{x}))
            r[x * s.n_controls() + u.value] = expected_reward(s, p, StateId{x}, u);
    return r;
}

inline double q_value(const Scenario& s, ParamId p, double reward, StateId x, ControlId u, std::span<const double> v) {
    const auto row = s.transition(p, x, u);
    double future = 0.0;
    for (std::size_t y = 0; y < row.size(); ++y) future += row[y] * v[y];
    return reward + s.beta() * future;
}

/// Lowest-index argmax; a later control must win by more than rounding noise.
inline bool improves(double candidate, double incumbent) {
    return candidate > incumbent + 1e-12 * (1.0 + std::abs(incumbent));
}

struct Backup {
    std::vector<double> values;
    std::vector<ControlId> greedy;
};

inline Backup backup(const Scenario& s, ParamId p, std::span<const double> rewards, std::span<const double> v) {
    Backup out{std::vector<double>(s.n_states()), std::vector<ControlId>(s.n_states())};
    for (std::size_t x = 0; x < s.n_states(); ++x) {
        const StateId sx{x};
        bool first = true;
        for (const ControlId u : s.admissible(sx)) {
            const double q = q_value(s, p, rewards[x * s.n_controls() + u.value], sx, u, v);
            if (first || improves(q, out.values[x])) {
                out.values[x] = q;
                out.greedy[x] = u;
                first = false;
            }
        }
    }
    return out;
}

inline double sup_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace detail

/// (TV)(x) = max over admissible u of r^p(x,u) + beta * sum_y q^p(y|x,u) V(y).
inline std::vector<double> bellman_backup(const Scenario& s, ParamId p, std::span<const double> v) {
    if (v.size() != s.n_states()) throw ModelError("value vector length differs from the number of states");
    const auto rewards = detail::reward_table(s, p);
    return detail::backup(s, p, rewards, v).values;
}

struct ValueIterationResult {
    std::vector<double> values;
    std::vector<ControlId> policy;
    std::size_t iterations = 0;
    /// Sup-norm Bellman residual of `values` (measured, not estimated).
    double residual = 0.0;
};

/**
 * Discounted value iteration for parameter p.
 *
 * Iterates from V = 0 until ||V_{k+1} - V_k|| < tol (1 - beta) / (2 beta), which
 * bounds the Bellman residual of V_{k+1} by tol. The policy is greedy w.r.t.
 * the returned values with lowest-index tie-breaking.
 */
inline ValueIterationResult value_iteration(const Scenario& s, ParamId p, double tol = default_solver_tolerance) {
    if (!(tol > 0.0)) throw ModelError("solver tolerance must be positive");
    const double beta = s.beta();
    const auto rewards = detail::reward_table(s, p);
    const double threshold = beta > 0.0 ? tol * (1.0 - beta) / (2.0 * beta) : 0.0;

    ValueIterationResult res;
    std::vector<double> v(s.n_states(), 0.0);
    while (true) {
        auto next = detail::backup(s, p, rewards, v);
        ++res.iterations;
        const double step = detail::sup_distance(next.values, v);
        v = std::move(next.values);
        if (beta == 0.0 || step < threshold) break;
    }
    auto last = detail::backup(s, p, rewards, v);
    res.residual = detail::sup_distance(last.values, v);
    res.policy = std::move(last.greedy);
    res.values = std::move(v);
    return res;
}

/**
 * phi^p(x,u) = r^p(x,u) + beta * sum_y q^p(y|x,u) V*(y) - V*(x).
 *
 * Zero at the optimal control and non-positive elsewhere, up to the solver
 * tolerance that produced V*.
 */
inline double temporal_difference_error(const Scenario& s, ParamId p, std::span<const double> v_star, StateId x,
                                        ControlId u) {
    s.require_admissible(x, u);
    return detail::q_value(s, p, expected_reward(s, p, x, u), x, u, v_star) - v_star[x.value];
}

/// Optimal values and policies for every candidate parameter.
class Plan {
public:
    Plan() = default;

    explicit Plan(const Scenario& s, double tol = default_solver_tolerance) : tol_(tol) {
        solutions_.reserve(s.n_params());
        for (std::size_t p = 0; p < s.n_params(); ++p) solutions_.push_back(value_iteration(s, ParamId{p}, tol));
    }

    [[nodiscard]] std::span<const double> values(ParamId p) const { return solutions_.at(p.value).values; }
    [[nodiscard]] double value(ParamId p, StateId x) const { return solutions_.at(p.value).values.at(x.value); }
    [[nodiscard]] ControlId control(ParamId p, StateId x) const { return solutions_.at(p.value).policy.at(x.value); }
    [[nodiscard]] const ValueIterationResult& solution(ParamId p) const { return solutions_.at(p.value); }
    [[nodiscard]] std::size_t n_params() const { return solutions_.size(); }
    [[nodiscard]] double tolerance() const { return tol_; }

private:
    double tol_ = default_solver_tolerance;
    std::vector<ValueIterationResult> solutions_;
};

/// phi^p(x,u) for every admissible pair, laid out [x][u] (NaN elsewhere).
inline std::vector<double> td_error_table(const Scenario& s, const Plan& plan, ParamId p) {
    std::vector<double> phi(s.n_states() * s.n_controls(), std::nan(""));
    const auto v = plan.values(p);
    for (std::size_t x = 0; x < s.n_states(); ++x)
        for (const ControlId u : s.admissible(StateId{x}))
            phi[x * s.n_controls() + u.value] = temporal_difference_error(s, p, v, StateId{x}, u);
    return phi;
}

}  // namespace tsregret
