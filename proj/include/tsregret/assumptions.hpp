#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "tsregret/model.hpp"

namespace tsregret {

/**
 * How the Gaussian reward term of the relative entropy is evaluated.
 *
 * `definitional` is the Kullback-Leibler divergence of the (truncated)
 * densities. `dropped_variance_factor` reproduces a common hand simplification
 * that cancels the 1/(2 sigma^2) factor of the log-density ratio, i.e.
 * E_p[(r - mu_g)^2 - (r - mu_p)^2] = (mu_p - mu_g)^2 for equal variances.
 * Categorical terms are identical under both.
 */
enum class EntropyConvention { definitional, dropped_variance_factor };

struct RelativeEntropy {
    double value = 0.0;
    /// False when p puts mass where g has none; `value` is then +inf.
    bool absolutely_continuous = true;
};

inline constexpr double infinite_entropy = std::numeric_limits<double>::infinity();

/// KL(N(mu_p, var_p) || N(mu_g, var_g)), untruncated closed form.
inline double gaussian_relative_entropy(double mean_p, double var_p, double mean_g, double var_g) {
    const double d = mean_p - mean_g;
    return 0.5 * (std::log(var_g / var_p) + (var_p + d * d) / var_g - 1.0);
}

/// KL between two probability vectors over the same index set.
inline RelativeEntropy categorical_relative_entropy(std::span<const double> p, std::span<const double> g) {
    double k = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (g[i] <= 0.0) return {infinite_entropy, false};
        k += p[i] * std::log(p[i] / g[i]);
    }
    return {std::max(k, 0.0), true};
}

namespace detail {

inline RelativeEntropy atoms_relative_entropy(const Categorical& p, const Categorical& g) {
    double k = 0.0;
    for (std::size_t i = 0; i < p.support.size(); ++i) {
        if (p.probs[i] <= 0.0) continue;
        // Mass of each distribution at this atom, merging duplicate atoms.
        double pp = 0.0;
        for (std::size_t j = 0; j < p.support.size(); ++j)
            if (same_atom(p.support[j], p.support[i])) pp += p.probs[j];
        double gg = 0.0;
        for (std::size_t j = 0; j < g.support.size(); ++j)
            if (same_atom(g.support[j], p.support[i])) gg += g.probs[j];
        if (gg <= 0.0) return {infinite_entropy, false};
        k += p.probs[i] * std::log(pp / gg);
    }
    return {std::max(k, 0.0), true};
}

/// Integral of f_p log(f_p / f_g) over p's interval by adaptive Gauss-Kronrod.
inline RelativeEntropy gaussian_pair_relative_entropy(const TruncatedGaussian& p, const TruncatedGaussian& g) {
    if (p.lo < g.lo || p.hi > g.hi) return {infinite_entropy, false};
    auto integrand = [&](double r) {
        const double lp = truncnorm::log_pdf(p.mean, p.variance, p.lo, p.hi, r);
        const double lg = truncnorm::log_pdf(g.mean, g.variance, g.lo, g.hi, r);
        return std::exp(lp) * (lp - lg);
    };
    // Split at the mean so the adaptive rule sees a smooth bump on each side.
    const double mid = std::clamp(p.mean, p.lo, p.hi);
    using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
    double k = 0.0;
    if (mid > p.lo) k += gk::integrate(integrand, p.lo, mid, 15, 1e-13);
    if (mid < p.hi) k += gk::integrate(integrand, mid, p.hi, 15, 1e-13);
    return {std::max(k, 0.0), true};
}

}  // namespace detail

/// KL(f_p || f_g) between two reward models. Point masses and densities are
/// mutually singular, so mixed families give +inf.
inline RelativeEntropy reward_relative_entropy(const RewardModel& p, const RewardModel& g,
                                               EntropyConvention convention = EntropyConvention::definitional) {
    const auto* cp = std::get_if<Categorical>(&p);
    const auto* cg = std::get_if<Categorical>(&g);
    if (cp && cg) return detail::atoms_relative_entropy(*cp, *cg);
    const auto* tp = std::get_if<TruncatedGaussian>(&p);
    const auto* tg = std::get_if<TruncatedGaussian>(&g);
    if (tp && tg) {
        if (convention == EntropyConvention::dropped_variance_factor) {
            if (tp->lo < tg->lo || tp->hi > tg->hi) return {infinite_entropy, false};
            const double d = tp->mean - tg->mean;
            return {d * d, true};
        }
        return detail::gaussian_pair_relative_entropy(*tp, *tg);
    }
    return {infinite_entropy, false};
}

/**
 * K(rho^p | rho^g) at (x, u): relative entropy of the joint law of
 * (reward, next state). Rewards and transitions are drawn independently, so
 * it splits into KL(f^p || f^g) + KL(q^p || q^g).
 */
inline RelativeEntropy relative_entropy(const Scenario& s, StateId x, ControlId u, ParamId p, ParamId g,
                                        EntropyConvention convention = EntropyConvention::definitional) {
    s.require_admissible(x, u);
    if (p == g) throw ModelError("relative entropy needs two distinct parameters");
    const auto kr = reward_relative_entropy(s.reward(p, x, u), s.reward(g, x, u), convention);
    const auto kq = categorical_relative_entropy(s.transition(p, x, u), s.transition(g, x, u));
    if (!kr.absolutely_continuous || !kq.absolutely_continuous) return {infinite_entropy, false};
    return {kr.value + kq.value, true};
}

// ---------------------------------------------------------------------------
// Standing positivity and separation conditions

struct EntropyEntry {
    StateId state;
    ControlId control;
    ParamId other;
    RelativeEntropy entropy;
};

struct AssumptionReport {
    double density_floor_reward = 0.0;
    double density_floor_transition = 0.0;
    /// K(rho^theta | rho^gamma) for every admissible (x, u) and gamma != theta.
    std::vector<EntropyEntry> entropy_matrix;
    double entropy_floor = 0.0;
    bool satisfied = false;
    std::vector<std::string> violations;
};

namespace detail {

/// inf over the rewards observable at (x, u) of f^gamma(r | x, u). The
/// observable set is the union of every parameter's support there.
inline double reward_density_floor(const Scenario& s, ParamId gamma, StateId x, ControlId u) {
    const RewardModel& own = s.reward(gamma, x, u);
    bool all_categorical = true;
    bool all_gaussian = true;
    for (std::size_t p = 0; p < s.n_params(); ++p) {
        const auto& m = s.reward(ParamId{p}, x, u);
        all_categorical = all_categorical && std::holds_alternative<Categorical>(m);
        all_gaussian = all_gaussian && std::holds_alternative<TruncatedGaussian>(m);
    }
    if (all_categorical) {
        double floor = std::numeric_limits<double>::infinity();
        for (std::size_t p = 0; p < s.n_params(); ++p) {
            const auto& c = std::get<Categorical>(s.reward(ParamId{p}, x, u));
            for (std::size_t i = 0; i < c.support.size(); ++i) {
                if (c.probs[i] <= 0.0) continue;
                floor = std::min(floor, std::exp(log_density(own, c.support[i])));
            }
        }
        return floor;
    }
    if (all_gaussian) {
        const auto& g = std::get<TruncatedGaussian>(own);
        for (std::size_t p = 0; p < s.n_params(); ++p) {
            const auto& other = std::get<TruncatedGaussian>(s.reward(ParamId{p}, x, u));
            if (other.lo < g.lo || other.hi > g.hi) return 0.0;
        }
        // A Gaussian density on an interval is smallest at one of its ends.
        return std::min(std::exp(log_density(own, g.lo)), std::exp(log_density(own, g.hi)));
    }
    return 0.0;
}

}  // namespace detail

/// Positivity of the reward and transition densities and separation of the
/// true parameter from every other one in relative entropy.
inline AssumptionReport check_assumption2(const Scenario& s, EntropyConvention convention = EntropyConvention::definitional) {
    AssumptionReport rep;
    rep.density_floor_reward = std::numeric_limits<double>::infinity();
    rep.density_floor_transition = std::numeric_limits<double>::infinity();
    rep.entropy_floor = std::numeric_limits<double>::infinity();
    const ParamId theta = s.true_param();

    for (std::size_t x = 0; x < s.n_states(); ++x) {
        const StateId sx{x};
        for (const ControlId u : s.admissible(sx)) {
            for (std::size_t g = 0; g < s.n_params(); ++g) {
                const ParamId pg{g};
                const double fr = detail::reward_density_floor(s, pg, sx, u);
                rep.density_floor_reward = std::min(rep.density_floor_reward, fr);
                if (!(fr > 0.0)) rep.violations.push_back("reward density f[" + s.param_name(pg) + "](. | " +
                                                          s.state_name(sx) + ", " + s.control_name(u) +
                                                          ") vanishes on part of the observable rewards");
                const auto row = s.transition(pg, sx, u);
                for (std::size_t y = 0; y < row.size(); ++y) {
                    rep.density_floor_transition = std::min(rep.density_floor_transition, row[y]);
                    if (!(row[y] > 0.0))
                        rep.violations.push_back("q[" + s.param_name(pg) + "](" + s.state_name(StateId{y}) + " | " +
                                                 s.state_name(sx) + ", " + s.control_name(u) + ") = 0");
                }
                if (pg == theta) continue;
                const auto k = relative_entropy(s, sx, u, theta, pg, convention);
                rep.entropy_matrix.push_back({sx, u, pg, k});
                rep.entropy_floor = std::min(rep.entropy_floor, k.value);
                if (!(k.value > 0.0))
                    rep.violations.push_back("K(" + s.param_name(theta) + " | " + s.param_name(pg) + ") at (" +
                                             s.state_name(sx) + ", " + s.control_name(u) + ") = 0");
            }
        }
    }
    if (rep.entropy_matrix.empty()) rep.entropy_floor = 0.0;
    rep.satisfied = rep.density_floor_reward > 0.0 && rep.density_floor_transition > 0.0 && rep.entropy_floor > 0.0;
    return rep;
}

/// -2 M (1 + beta) / (1 - beta): lower bound on the expected temporal-difference
/// error incurred when the sampled parameter is wrong.
inline double lemma4_bound(const Scenario& s) {
    const double beta = s.beta();
    return -2.0 * reward_bound(s) * (1.0 + beta) / (1.0 - beta);
}

}  // namespace tsregret
