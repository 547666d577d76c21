#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tsregret/random.hpp"
#include "tsregret/truncated_normal.hpp"

namespace tsregret {

/// Raised for contract violations on model inputs (inadmissible controls,
/// out-of-support observations, malformed beliefs).
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double probability_tolerance = 1e-12;

template <class Tag>
struct Index {
    std::size_t value = 0;

    constexpr Index() = default;
    constexpr explicit Index(std::size_t v) : value(v) {}

    friend constexpr auto operator<=>(const Index&, const Index&) = default;
};

using ParamId = Index<struct ParamTag>;
using StateId = Index<struct StateTag>;
using ControlId = Index<struct ControlTag>;

// ---------------------------------------------------------------------------
// Reward densities

/// Finite reward distribution; density w.r.t. counting measure.
struct Categorical {
    std::vector<double> support;
    std::vector<double> probs;
};

/// N(mean, variance) restricted to [lo, hi] and renormalized; density w.r.t.
/// Lebesgue measure on the interval.
struct TruncatedGaussian {
    double mean = 0.0;
    double variance = 1.0;
    double lo = -1.0;
    double hi = 1.0;
};

using RewardModel = std::variant<Categorical, TruncatedGaussian>;

inline RewardModel point_mass(double r) { return Categorical{{r}, {1.0}}; }

/// Gaussian truncated symmetrically at mean +/- width_sigmas standard deviations.
inline RewardModel truncated_gaussian(double mean, double variance, double width_sigmas = 6.0) {
    const double half = width_sigmas * std::sqrt(variance);
    return TruncatedGaussian{mean, variance, mean - half, mean + half};
}

namespace detail {

inline bool same_atom(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

/// Index drawn from a probability vector; zero-probability entries are never chosen.
inline std::size_t categorical_draw(std::span<const double> probs, double u) {
    double cum = 0.0;
    std::size_t last_positive = probs.size();
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (probs[i] <= 0.0) continue;
        cum += probs[i];
        last_positive = i;
        if (u < cum) return i;
    }
    return last_positive;
}

}  // namespace detail

/// Smallest interval containing every attainable reward of the model.
inline std::pair<double, double> support_interval(const RewardModel& m) {
    return std::visit(detail::overloaded{
                          [](const Categorical& c) {
                              const auto [lo, hi] = std::minmax_element(c.support.begin(), c.support.end());
                              return std::pair{*lo, *hi};
                          },
                          [](const TruncatedGaussian& g) { return std::pair{g.lo, g.hi}; },
                      },
                      m);
}

inline double mean(const RewardModel& m) {
    return std::visit(detail::overloaded{
                          [](const Categorical& c) {
                              double s = 0.0;
                              for (std::size_t i = 0; i < c.support.size(); ++i) s += c.support[i] * c.probs[i];
                              return s;
                          },
                          [](const TruncatedGaussian& g) { return truncnorm::mean(g.mean, g.variance, g.lo, g.hi); },
                      },
                      m);
}

inline bool in_support(const RewardModel& m, double r) {
    return std::visit(detail::overloaded{
                          [r](const Categorical& c) {
                              for (std::size_t i = 0; i < c.support.size(); ++i)
                                  if (c.probs[i] > 0.0 && detail::same_atom(c.support[i], r)) return true;
                              return false;
                          },
                          [r](const TruncatedGaussian& g) { return r >= g.lo && r <= g.hi; },
                      },
                      m);
}

/// Log density at r; -inf off the support rather than an error.
inline double log_density(const RewardModel& m, double r) {
    return std::visit(detail::overloaded{
                          [r](const Categorical& c) {
                              double p = 0.0;
                              for (std::size_t i = 0; i < c.support.size(); ++i)
                                  if (detail::same_atom(c.support[i], r)) p += c.probs[i];
                              return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
                          },
                          [r](const TruncatedGaussian& g) { return truncnorm::log_pdf(g.mean, g.variance, g.lo, g.hi, r); },
                      },
                      m);
}

/// One reward draw consuming exactly one uniform, so paired simulations that
/// share a stream stay coupled across different reward models.
inline double draw(const RewardModel& m, RandomStream& rng) {
    const double u = rng.uniform01();
    return std::visit(detail::overloaded{
                          [u](const Categorical& c) { return c.support[detail::categorical_draw(c.probs, u)]; },
                          [u](const TruncatedGaussian& g) {
                              return truncnorm::from_uniform(g.mean, g.variance, g.lo, g.hi, u);
                          },
                      },
                      m);
}

// ---------------------------------------------------------------------------
// Belief

/// Probability vector over the parameter set.
class Belief {
public:
    Belief() = default;

    explicit Belief(std::vector<double> probs) : probs_(std::move(probs)) {
        if (probs_.empty()) throw ModelError("belief must have at least one entry");
        double sum = 0.0;
        for (double p : probs_) {
            if (!std::isfinite(p) || p < 0.0) throw ModelError("belief entries must be finite and non-negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > probability_tolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "belief sums to " << sum << ", expected 1";
            throw ModelError(os.str());
        }
    }

    static Belief uniform(std::size_t n) { return Belief(std::vector<double>(n, 1.0 / static_cast<double>(n))); }

    static Belief point_mass(std::size_t n, ParamId p) {
        std::vector<double> probs(n, 0.0);
        probs.at(p.value) = 1.0;
        return Belief(std::move(probs));
    }

    /// Normalizes unnormalized log weights (log-sum-exp). Throws if every weight is -inf.
    static Belief from_log_weights(std::span<const double> log_w) {
        const double top = *std::max_element(log_w.begin(), log_w.end());
        if (!std::isfinite(top)) throw ModelError("every parameter has zero likelihood for the observation");
        std::vector<double> probs(log_w.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < log_w.size(); ++i) {
            probs[i] = std::exp(log_w[i] - top);
            sum += probs[i];
        }
        for (double& p : probs) p /= sum;
        Belief b;
        b.probs_ = std::move(probs);
        return b;
    }

    [[nodiscard]] double operator[](ParamId p) const { return probs_.at(p.value); }
    [[nodiscard]] std::span<const double> probs() const { return probs_; }
    [[nodiscard]] std::size_t size() const { return probs_.size(); }

    [[nodiscard]] bool is_degenerate() const {
        return std::count_if(probs_.begin(), probs_.end(), [](double p) { return p > 0.0; }) == 1;
    }

    friend bool operator==(const Belief&, const Belief&) = default;

private:
    std::vector<double> probs_;
};

// ---------------------------------------------------------------------------
// Scenario

/**
 * A finite theta-MDP: states, controls with per-state admissibility, and for
 * every parameter a reward model and a transition row per admissible
 * (state, control). Nature always runs under `true_param`; the decision maker
 * starts from `prior`.
 *
 * Build it with the setters, then share it as `const`.
 */
class Scenario {
public:
    Scenario() = default;

    Scenario(std::size_t n_params, std::size_t n_states, std::size_t n_controls)
        : n_params_(n_params),
          n_states_(n_states),
          n_controls_(n_controls),
          admissible_(n_states),
          rewards_(n_params * n_states * n_controls),
          transitions_(n_params * n_states * n_controls),
          prior_(n_params > 0 ? Belief::uniform(n_params) : Belief()) {
        for (std::size_t i = 0; i < n_params; ++i) param_names_.push_back(std::to_string(i));
        for (std::size_t i = 0; i < n_states; ++i) state_names_.push_back(std::to_string(i));
        for (std::size_t i = 0; i < n_controls; ++i) control_names_.push_back(std::to_string(i));
    }

    [[nodiscard]] std::size_t n_params() const { return n_params_; }
    [[nodiscard]] std::size_t n_states() const { return n_states_; }
    [[nodiscard]] std::size_t n_controls() const { return n_controls_; }

    // -- setup ---------------------------------------------------------------
    void set_admissible(StateId x, std::vector<ControlId> controls) { admissible_.at(x.value) = std::move(controls); }
    void set_reward(ParamId p, StateId x, ControlId u, RewardModel m) { rewards_.at(slot(p, x, u)) = std::move(m); }
    void set_transition(ParamId p, StateId x, ControlId u, std::vector<double> row) {
        transitions_.at(slot(p, x, u)) = std::move(row);
    }
    /// Same reward model for every parameter.
    void set_shared_reward(StateId x, ControlId u, const RewardModel& m) {
        for (std::size_t p = 0; p < n_params_; ++p) set_reward(ParamId{p}, x, u, m);
    }
    /// Same transition row for every parameter.
    void set_shared_transition(StateId x, ControlId u, const std::vector<double>& row) {
        for (std::size_t p = 0; p < n_params_; ++p) set_transition(ParamId{p}, x, u, row);
    }
    void set_beta(double beta) { beta_ = beta; }
    void set_prior(Belief prior) { prior_ = std::move(prior); }
    void set_true_param(ParamId p) { true_param_ = p; }
    void set_initial_state(StateId x) { initial_state_ = x; }
    /// Permits prior entries equal to zero (needed to exercise point-mass priors).
    void set_degenerate_prior_allowed(bool allowed) { degenerate_prior_allowed_ = allowed; }
    void set_name(std::string name) { name_ = std::move(name); }
    void set_description(std::string d) { description_ = std::move(d); }
    void set_param_names(std::vector<std::string> names) { param_names_ = std::move(names); }
    void set_state_names(std::vector<std::string> names) { state_names_ = std::move(names); }
    void set_control_names(std::vector<std::string> names) { control_names_ = std::move(names); }

    // -- queries -------------------------------------------------------------
    [[nodiscard]] std::span<const ControlId> admissible(StateId x) const { return admissible_.at(x.value); }

    [[nodiscard]] bool is_admissible(StateId x, ControlId u) const {
        if (x.value >= n_states_) return false;
        const auto& a = admissible_[x.value];
        return std::find(a.begin(), a.end(), u) != a.end();
    }

    [[nodiscard]] bool has_reward(ParamId p, StateId x, ControlId u) const {
        return in_range(p, x, u) && rewards_[slot(p, x, u)].has_value();
    }

    [[nodiscard]] const RewardModel& reward(ParamId p, StateId x, ControlId u) const {
        require_admissible(x, u);
        const auto& m = rewards_.at(slot(p, x, u));
        if (!m) throw ModelError("no reward model for " + label(p, x, u));
        return *m;
    }

    [[nodiscard]] std::span<const double> transition(ParamId p, StateId x, ControlId u) const {
        require_admissible(x, u);
        const auto& row = transitions_.at(slot(p, x, u));
        if (row.size() != n_states_) throw ModelError("no transition row for " + label(p, x, u));
        return row;
    }

    [[nodiscard]] std::span<const double> transition_row_raw(ParamId p, StateId x, ControlId u) const {
        return transitions_.at(slot(p, x, u));
    }

    [[nodiscard]] double beta() const { return beta_; }
    [[nodiscard]] const Belief& prior() const { return prior_; }
    [[nodiscard]] ParamId true_param() const { return true_param_; }
    [[nodiscard]] StateId initial_state() const { return initial_state_; }
    [[nodiscard]] bool degenerate_prior_allowed() const { return degenerate_prior_allowed_; }
    [[nodiscard]] const std::string& name() const { return name_; }
    [[nodiscard]] const std::string& description() const { return description_; }

    [[nodiscard]] const std::string& param_name(ParamId p) const { return param_names_.at(p.value); }
    [[nodiscard]] const std::string& state_name(StateId x) const { return state_names_.at(x.value); }
    [[nodiscard]] const std::string& control_name(ControlId u) const { return control_names_.at(u.value); }
    [[nodiscard]] const std::vector<std::string>& param_names() const { return param_names_; }
    [[nodiscard]] const std::vector<std::string>& state_names() const { return state_names_; }
    [[nodiscard]] const std::vector<std::string>& control_names() const { return control_names_; }

    [[nodiscard]] std::string label(ParamId p, StateId x, ControlId u) const {
        return "param " + name_or_index(param_names_, p.value) + ", state " + name_or_index(state_names_, x.value) +
               ", control " + name_or_index(control_names_, u.value);
    }

    void require_admissible(StateId x, ControlId u) const {
        if (!is_admissible(x, u)) {
            throw ModelError("control " + name_or_index(control_names_, u.value) + " is not admissible at state " +
                             name_or_index(state_names_, x.value));
        }
    }

private:
    [[nodiscard]] bool in_range(ParamId p, StateId x, ControlId u) const {
        return p.value < n_params_ && x.value < n_states_ && u.value < n_controls_;
    }

    [[nodiscard]] std::size_t slot(ParamId p, StateId x, ControlId u) const {
        if (!in_range(p, x, u)) throw ModelError("index out of range");
        return (p.value * n_states_ + x.value) * n_controls_ + u.value;
    }

    static std::string name_or_index(const std::vector<std::string>& names, std::size_t i) {
        return i < names.size() ? names[i] : std::to_string(i);
    }

    std::size_t n_params_ = 0;
    std::size_t n_states_ = 0;
    std::size_t n_controls_ = 0;
    std::vector<std::vector<ControlId>> admissible_;
    std::vector<std::optional<RewardModel>> rewards_;
    std::vector<std::vector<double>> transitions_;
    double beta_ = 0.9;
    Belief prior_;
    ParamId true_param_{0};
    StateId initial_state_{0};
    bool degenerate_prior_allowed_ = false;
    std::string name_;
    std::string description_;
    std::vector<std::string> param_names_;
    std::vector<std::string> state_names_;
    std::vector<std::string> control_names_;
};

/// Copy of `s` whose prior is a point mass on the true parameter.
inline Scenario with_degenerate_prior(Scenario s) {
    s.set_degenerate_prior_allowed(true);
    s.set_prior(Belief::point_mass(s.n_params(), s.true_param()));
    return s;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationReport {
    std::vector<std::string> violations;

    [[nodiscard]] bool ok() const { return violations.empty(); }
    friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

namespace detail {

inline std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

inline void check_reward_model(const RewardModel& m, const std::string& where, std::vector<std::string>& out) {
    std::visit(overloaded{
                   [&](const Categorical& c) {
                       if (c.support.empty()) out.push_back(where + ": categorical reward has empty support");
                       if (c.support.size() != c.probs.size()) {
                           out.push_back(where + ": categorical support and probs differ in length");
                           return;
                       }
                       double sum = 0.0;
                       for (std::size_t i = 0; i < c.probs.size(); ++i) {
                           if (!std::isfinite(c.support[i])) out.push_back(where + ": non-finite reward atom");
                           if (!std::isfinite(c.probs[i]) || c.probs[i] < 0.0)
                               out.push_back(where + ": negative or non-finite reward probability");
                           sum += c.probs[i];
                       }
                       if (std::abs(sum - 1.0) > probability_tolerance)
                           out.push_back(where + ": reward probabilities sum to " + fmt_num(sum));
                   },
                   [&](const TruncatedGaussian& g) {
                       if (!std::isfinite(g.mean)) out.push_back(where + ": non-finite Gaussian mean");
                       if (!(g.variance > 0.0) || !std::isfinite(g.variance))
                           out.push_back(where + ": Gaussian variance must be positive");
                       if (!(g.lo < g.hi) || !std::isfinite(g.lo) || !std::isfinite(g.hi))
                           out.push_back(where + ": truncation interval needs finite lo < hi");
                   },
               },
               m);
}

}  // namespace detail

/// Structural check of every model constraint; reports, never throws.
inline ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport rep;
    auto& out = rep.violations;
    if (s.n_params() == 0) out.emplace_back("parameter set is empty");
    if (s.n_states() == 0) out.emplace_back("state set is empty");
    if (s.n_controls() == 0) out.emplace_back("control set is empty");
    if (!out.empty()) return rep;

    if (!(s.beta() >= 0.0 && s.beta() < 1.0)) out.push_back("discount factor must lie in [0, 1), got " + detail::fmt_num(s.beta()));
    if (s.true_param().value >= s.n_params()) out.emplace_back("true parameter index out of range");
    if (s.initial_state().value >= s.n_states()) out.emplace_back("initial state index out of range");

    const auto prior = s.prior().probs();
    if (prior.size() != s.n_params()) {
        out.emplace_back("prior length differs from the number of parameters");
    } else if (!s.degenerate_prior_allowed()) {
        for (std::size_t p = 0; p < prior.size(); ++p)
            if (!(prior[p] > 0.0)) out.push_back("prior on param " + s.param_name(ParamId{p}) + " is not positive");
    }

    for (std::size_t x = 0; x < s.n_states(); ++x) {
        const StateId sx{x};
        const auto adm = s.admissible(sx);
        if (adm.empty()) out.push_back("state " + s.state_name(sx) + " has no admissible control");
        for (std::size_t i = 0; i < adm.size(); ++i) {
            if (adm[i].value >= s.n_controls()) {
                out.push_back("state " + s.state_name(sx) + " lists an out-of-range control");
                continue;
            }
            if (std::find(adm.begin(), adm.begin() + static_cast<std::ptrdiff_t>(i), adm[i]) !=
                adm.begin() + static_cast<std::ptrdiff_t>(i))
                out.push_back("state " + s.state_name(sx) + " lists control " + s.control_name(adm[i]) + " twice");
        }
        for (const ControlId u : adm) {
            if (u.value >= s.n_controls()) continue;
            for (std::size_t p = 0; p < s.n_params(); ++p) {
                const ParamId sp{p};
                const std::string where = s.label(sp, sx, u);
                if (!s.has_reward(sp, sx, u)) {
                    out.push_back(where + ": missing reward model");
                } else {
                    detail::check_reward_model(s.reward(sp, sx, u), where, out);
                }
                const auto row = s.transition_row_raw(sp, sx, u);
                if (row.size() != s.n_states()) {
                    out.push_back(where + ": transition row has " + std::to_string(row.size()) + " entries, expected " +
                                  std::to_string(s.n_states()));
                    continue;
                }
                double sum = 0.0;
                for (double q : row) {
                    if (!std::isfinite(q) || q < 0.0) out.push_back(where + ": negative or non-finite transition probability");
                    sum += q;
                }
                if (std::abs(sum - 1.0) > probability_tolerance)
                    out.push_back(where + ": transition row sums to " + detail::fmt_num(sum));
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Scenario-level operations

/// r^p(x, u): mean of the one-step reward density (closed form per family).
inline double expected_reward(const Scenario& s, ParamId p, StateId x, ControlId u) { return mean(s.reward(p, x, u)); }

/// M = max |r^p(x,u)| over all parameters and admissible pairs.
inline double reward_bound(const Scenario& s) {
    double m = 0.0;
    for (std::size_t p = 0; p < s.n_params(); ++p)
        for (std::size_t x = 0; x < s.n_states(); ++x)
            for (const ControlId u : s.admissible(StateId{x}))
                m = std::max(m, std::abs(expected_reward(s, ParamId{p}, StateId{x}, u)));
    return m;
}

inline double sample_reward(const Scenario& s, ParamId p, StateId x, ControlId u, RandomStream& rng) {
    return draw(s.reward(p, x, u), rng);
}

inline StateId sample_transition(const Scenario& s, ParamId p, StateId x, ControlId u, RandomStream& rng) {
    return StateId{detail::categorical_draw(s.transition(p, x, u), rng.uniform01())};
}

/// log f^p(r | x, u). Throws when r is not in the model's support.
inline double log_reward_density(const Scenario& s, ParamId p, StateId x, ControlId u, double r) {
    const auto& m = s.reward(p, x, u);
    if (!in_support(m, r)) {
        throw ModelError("reward " + detail::fmt_num(r) + " lies outside the support for " + s.label(p, x, u));
    }
    return log_density(m, r);
}

/// log q^p(y | x, u); -inf for impossible transitions.
inline double log_transition_density(const Scenario& s, ParamId p, StateId x, ControlId u, StateId y) {
    const auto row = s.transition(p, x, u);
    if (y.value >= row.size()) throw ModelError("next state index out of range");
    const double q = row[y.value];
    return q > 0.0 ? std::log(q) : -std::numeric_limits<double>::infinity();
}

}  // namespace tsregret
