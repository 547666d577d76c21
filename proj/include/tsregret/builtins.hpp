#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tsregret/model.hpp"

namespace tsregret::builtins {

/**
 * Three states x0, xA, xB. At x0 control A leads to xA and B to xB, both with
 * reward 0; xA and xB are absorbing and admit only the control that led there.
 * Rewards are deterministic: R^A(xA) = 1, R^B(xA) = 0, R^A(xB) = 0,
 * R^B(xB) = 1. The true parameter is B.
 */
inline Scenario example1(double beta = 0.9, double prior_on_true = 0.5) {
    Scenario s(2, 3, 2);
    s.set_name("example1");
    s.set_description("Stuck after the first choice: constant reward depending only on the control picked at t=0.");
    s.set_param_names({"A", "B"});
    s.set_state_names({"x0", "xA", "xB"});
    s.set_control_names({"A", "B"});

    const StateId x0{0}, xA{1}, xB{2};
    const ControlId a{0}, b{1};
    const ParamId pa{0}, pb{1};

    s.set_admissible(x0, {a, b});
    s.set_admissible(xA, {a});
    s.set_admissible(xB, {b});

    s.set_shared_reward(x0, a, point_mass(0.0));
    s.set_shared_reward(x0, b, point_mass(0.0));
    s.set_reward(pa, xA, a, point_mass(1.0));
    s.set_reward(pb, xA, a, point_mass(0.0));
    s.set_reward(pa, xB, b, point_mass(0.0));
    s.set_reward(pb, xB, b, point_mass(1.0));

    s.set_shared_transition(x0, a, {0.0, 1.0, 0.0});
    s.set_shared_transition(x0, b, {0.0, 0.0, 1.0});
    s.set_shared_transition(xA, a, {0.0, 1.0, 0.0});
    s.set_shared_transition(xB, b, {0.0, 0.0, 1.0});

    s.set_beta(beta);
    s.set_true_param(pb);
    s.set_prior(Belief({1.0 - prior_on_true, prior_on_true}));
    return s;
}

/**
 * Absorption into an unfavorable state. Same x0 -> {xA, xB} structure as
 * example1, but xA and xB both admit controls 1 and 2 with deterministic
 * rewards:
 *
 *   xA: R^A(1) = 1, R^B(1) = 0,   R^A(2) = 1,   R^B(2) = 0.5
 *   xB: R^A(1) = 0, R^B(1) = 1,   R^A(2) = 0.1, R^B(2) = 1
 *
 * True parameter B. The prior on A is "approximately 1", realized as 0.999.
 */
inline Scenario example2(double beta = 0.9, double prior_on_a = 0.999) {
    Scenario s(2, 3, 4);
    s.set_name("example2");
    s.set_description(
        "Absorption into an unfavorable set of states; deterministic rewards depending on the control. "
        "Prior on A = 0.999 (realizes 'approximately 1').");
    s.set_param_names({"A", "B"});
    s.set_state_names({"x0", "xA", "xB"});
    s.set_control_names({"A", "B", "1", "2"});

    const StateId x0{0}, xA{1}, xB{2};
    const ControlId a{0}, b{1}, c1{2}, c2{3};
    const ParamId pa{0}, pb{1};

    s.set_admissible(x0, {a, b});
    s.set_admissible(xA, {c1, c2});
    s.set_admissible(xB, {c1, c2});

    s.set_shared_reward(x0, a, point_mass(0.0));
    s.set_shared_reward(x0, b, point_mass(0.0));
    s.set_reward(pa, xA, c1, point_mass(1.0));
    s.set_reward(pb, xA, c1, point_mass(0.0));
    s.set_reward(pa, xA, c2, point_mass(1.0));
    s.set_reward(pb, xA, c2, point_mass(0.5));
    s.set_reward(pa, xB, c1, point_mass(0.0));
    s.set_reward(pb, xB, c1, point_mass(1.0));
    s.set_reward(pa, xB, c2, point_mass(0.1));
    s.set_reward(pb, xB, c2, point_mass(1.0));

    s.set_shared_transition(x0, a, {0.0, 1.0, 0.0});
    s.set_shared_transition(x0, b, {0.0, 0.0, 1.0});
    for (const ControlId u : {c1, c2}) {
        s.set_shared_transition(xA, u, {0.0, 1.0, 0.0});
        s.set_shared_transition(xB, u, {0.0, 0.0, 1.0});
    }

    s.set_beta(beta);
    s.set_true_param(pb);
    s.set_prior(Belief({prior_on_a, 1.0 - prior_on_a}));
    return s;
}

inline constexpr double example3_variance = 0.1;

/**
 * Single state x0, controls 1 and 2, Gaussian rewards with variance 0.1:
 *
 *   control 1: A ~ N(0.5, 0.1), B ~ N(0.3, 0.1)
 *   control 2: A ~ N(0.4, 0.1), B ~ N(0.8, 0.1)
 *
 * True parameter B, prior 0.5 on each. All four densities are truncated to
 * the common interval [0.3 - 6 sd, 0.8 + 6 sd] so every parameter's density
 * is positive wherever any other's is.
 */
inline Scenario example3(double beta = 0.9, double prior_on_a = 0.5) {
    Scenario s(2, 1, 2);
    s.set_name("example3");
    s.set_description("Single state, stochastic Gaussian rewards depending on the control (variance 0.1, truncated at 6 sd).");
    s.set_param_names({"A", "B"});
    s.set_state_names({"x0"});
    s.set_control_names({"1", "2"});

    const StateId x0{0};
    const ControlId c1{0}, c2{1};
    const ParamId pa{0}, pb{1};
    const double sd = std::sqrt(example3_variance);
    const double lo = 0.3 - 6.0 * sd;
    const double hi = 0.8 + 6.0 * sd;
    auto gauss = [&](double m) { return RewardModel{TruncatedGaussian{m, example3_variance, lo, hi}}; };

    s.set_admissible(x0, {c1, c2});
    s.set_reward(pa, x0, c1, gauss(0.5));
    s.set_reward(pb, x0, c1, gauss(0.3));
    s.set_reward(pa, x0, c2, gauss(0.4));
    s.set_reward(pb, x0, c2, gauss(0.8));
    s.set_shared_transition(x0, c1, {1.0});
    s.set_shared_transition(x0, c2, {1.0});

    s.set_beta(beta);
    s.set_true_param(pb);
    s.set_prior(Belief({prior_on_a, 1.0 - prior_on_a}));
    return s;
}

inline const std::vector<std::string>& names() {
    static const std::vector<std::string> n{"example1", "example2", "example3"};
    return n;
}

inline std::optional<Scenario> by_name(std::string_view name) {
    if (name == "example1") return example1();
    if (name == "example2") return example2();
    if (name == "example3") return example3();
    return std::nullopt;
}

}  // namespace tsregret::builtins
