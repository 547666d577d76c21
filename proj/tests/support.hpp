#pragma once

// Shared helpers for the unit tests: a random-scenario generator and oracles
// written independently of the library code they check.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "tsregret/tsregret.hpp"

namespace testing_support {

using namespace tsregret;

struct RandomScenarioOptions {
    std::size_t params = 3;
    std::size_t states = 3;
    std::size_t controls = 3;
    /// Atoms shared by every parameter's reward model at a given (x, u).
    std::size_t atoms = 3;
    /// Allow zero transition probabilities.
    bool sparse_transitions = false;
};

inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n, bool allow_zero) {
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    std::bernoulli_distribution zero(0.3);
    std::vector<double> v(n);
    double sum = 0.0;
    for (auto& x : v) {
        x = unif(rng);
        if (allow_zero && zero(rng)) x = 0.0;
        sum += x;
    }
    if (sum == 0.0) {
        v[0] = 1.0;
        sum = 1.0;
    }
    for (auto& x : v) x /= sum;
    // Force an exact unit sum so validation's 1e-12 tolerance is met.
    double rest = 0.0;
    for (std::size_t i = 1; i < n; ++i) rest += v[i];
    v[0] = 1.0 - rest;
    return v;
}

/// Finite scenario with categorical rewards on shared atoms and random rows.
inline Scenario random_scenario(std::uint64_t seed, const RandomScenarioOptions& o = {}) {
    std::mt19937_64 rng(seed);
    Scenario s(o.params, o.states, o.controls);
    s.set_name("random-" + std::to_string(seed));
    std::uniform_real_distribution<double> reward(-1.0, 2.0);
    std::uniform_real_distribution<double> beta(0.3, 0.95);
    for (std::size_t x = 0; x < o.states; ++x) {
        std::vector<ControlId> adm;
        for (std::size_t u = 0; u < o.controls; ++u)
            if (std::bernoulli_distribution(0.7)(rng) || (u + 1 == o.controls && adm.empty())) adm.emplace_back(u);
        s.set_admissible(StateId{x}, adm);
        for (const ControlId u : adm) {
            std::vector<double> atoms(o.atoms);
            for (auto& a : atoms) a = std::round(reward(rng) * 1000.0) / 1000.0;
            for (std::size_t p = 0; p < o.params; ++p) {
                s.set_reward(ParamId{p}, StateId{x}, u, Categorical{atoms, random_simplex(rng, o.atoms, false)});
                s.set_transition(ParamId{p}, StateId{x}, u, random_simplex(rng, o.states, o.sparse_transitions));
            }
        }
    }
    s.set_beta(beta(rng));
    s.set_prior(Belief(random_simplex(rng, o.params, false)));
    s.set_true_param(ParamId{std::uniform_int_distribution<std::size_t>(0, o.params - 1)(rng)});
    return s;
}

/// Truncated normal density evaluated through boost's normal distribution.
inline double tg_density(const TruncatedGaussian& g, double r) {
    if (r < g.lo || r > g.hi) return 0.0;
    const boost::math::normal_distribution<double> n(g.mean, std::sqrt(g.variance));
    const double mass = boost::math::cdf(boost::math::complement(n, g.lo)) - boost::math::cdf(boost::math::complement(n, g.hi));
    return boost::math::pdf(n, r) / mass;
}

/// Reward density or probability of r under m, by direct lookup.
inline double reward_density(const RewardModel& m, double r) {
    if (const auto* c = std::get_if<Categorical>(&m)) {
        double p = 0.0;
        for (std::size_t i = 0; i < c->support.size(); ++i)
            if (c->support[i] == r) p += c->probs[i];
        return p;
    }
    return tg_density(std::get<TruncatedGaussian>(m), r);
}

/// Posterior after a whole history, from the product of likelihood factors.
inline std::vector<double> batch_posterior(const Scenario& s, const Belief& prior, const Trajectory& traj) {
    std::vector<double> log_w(s.n_params());
    for (std::size_t g = 0; g < s.n_params(); ++g) {
        const ParamId pg{g};
        double lw = std::log(prior[pg]);
        for (std::size_t t = 0; t < traj.size(); ++t) {
            const auto& st = traj.steps[t];
            const StateId y = t + 1 < traj.size() ? traj.steps[t + 1].state : traj.terminal_state;
            lw += std::log(reward_density(s.reward(pg, st.state, st.control), st.reward));
            lw += std::log(s.transition(pg, st.state, st.control)[y.value]);
        }
        log_w[g] = lw;
    }
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : log_w) mx = std::max(mx, v);
    double sum = 0.0;
    std::vector<double> w(log_w.size());
    for (std::size_t g = 0; g < w.size(); ++g) sum += (w[g] = std::exp(log_w[g] - mx));
    for (auto& v : w) v /= sum;
    return w;
}

/// Relative entropy of the joint (reward, next state) law, enumerating pairs.
inline double joint_relative_entropy(const Scenario& s, StateId x, ControlId u, ParamId p, ParamId g) {
    const auto& fp = std::get<Categorical>(s.reward(p, x, u));
    const auto qp = s.transition(p, x, u);
    const auto qg = s.transition(g, x, u);
    double k = 0.0;
    for (std::size_t i = 0; i < fp.support.size(); ++i) {
        for (std::size_t y = 0; y < qp.size(); ++y) {
            const double jp = fp.probs[i] * qp[y];
            if (jp == 0.0) continue;
            const double jg = reward_density(s.reward(g, x, u), fp.support[i]) * qg[y];
            if (jg == 0.0) return std::numeric_limits<double>::infinity();
            // Atoms may repeat; weigh each listed atom by its own share.
            const double jp_total = reward_density(s.reward(p, x, u), fp.support[i]) * qp[y];
            k += jp * std::log(jp_total / jg);
        }
    }
    return k;
}

/// Fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("tsregret_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing_support
