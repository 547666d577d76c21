#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsregret/model.hpp"

namespace tsregret {

/// Scenario file problem; `what()` names the JSON path, e.g. "rewards[3].model.variance".
class ScenarioFormatError : public ModelError {
public:
    using ModelError::ModelError;
};

namespace io_detail {

using json = nlohmann::json;

inline const json& field(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ScenarioFormatError(path + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw ScenarioFormatError(path + (path.empty() ? "" : ".") + key + ": missing field");
    return *it;
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline double number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ScenarioFormatError(path + ": expected a number");
    return v.get<double>();
}

inline std::size_t count(const json& v, const std::string& path) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) throw ScenarioFormatError(path + ": expected an integer");
    if (v.get<long long>() < 0) throw ScenarioFormatError(path + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

inline std::vector<double> numbers(const json& v, const std::string& path) {
    if (!v.is_array()) throw ScenarioFormatError(path + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline std::vector<std::string> names(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) throw ScenarioFormatError(path + ": expected a non-empty array of names");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) throw ScenarioFormatError(path + "[" + std::to_string(i) + "]: expected a string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

/// An index given either as an integer or as one of `known` names.
inline std::size_t index_of(const json& v, const std::vector<std::string>& known, const std::string& path) {
    if (v.is_string()) {
        const auto name = v.get<std::string>();
        for (std::size_t i = 0; i < known.size(); ++i)
            if (known[i] == name) return i;
        throw ScenarioFormatError(path + ": unknown name \"" + name + "\"");
    }
    const std::size_t i = count(v, path);
    if (i >= known.size()) throw ScenarioFormatError(path + ": index " + std::to_string(i) + " out of range");
    return i;
}

inline RewardModel reward_model(const json& v, const std::string& path) {
    const auto type = field(v, "type", path);
    if (!type.is_string()) throw ScenarioFormatError(join(path, "type") + ": expected a string");
    const auto t = type.get<std::string>();
    if (t == "categorical") {
        return Categorical{numbers(field(v, "support", path), join(path, "support")),
                           numbers(field(v, "probs", path), join(path, "probs"))};
    }
    if (t == "truncated_gaussian") {
        const double m = number(field(v, "mean", path), join(path, "mean"));
        const double var = number(field(v, "variance", path), join(path, "variance"));
        if (!(var > 0.0)) throw ScenarioFormatError(join(path, "variance") + ": must be positive");
        if (v.contains("lo") != v.contains("hi"))
            throw ScenarioFormatError(path + ": give both lo and hi, or neither");
        if (!v.contains("lo")) return truncated_gaussian(m, var);
        return TruncatedGaussian{m, var, number(v["lo"], join(path, "lo")), number(v["hi"], join(path, "hi"))};
    }
    throw ScenarioFormatError(join(path, "type") + ": unknown reward model \"" + t + "\"");
}

}  // namespace io_detail

/**
 * Builds a scenario from its JSON form. Structural errors throw
 * ScenarioFormatError naming the field; semantic checks (row sums, prior
 * positivity, ...) are left to validate_scenario.
 *
 * States, controls and params may be referenced by index or by name.
 */
inline Scenario scenario_from_json(const nlohmann::json& doc) {
    using namespace io_detail;
    if (!doc.is_object()) throw ScenarioFormatError("document: expected an object");
    const auto params = names(field(doc, "params", ""), "params");
    const auto states = names(field(doc, "states", ""), "states");
    const auto controls = names(field(doc, "controls", ""), "controls");

    Scenario s(params.size(), states.size(), controls.size());
    s.set_param_names(params);
    s.set_state_names(states);
    s.set_control_names(controls);
    if (doc.contains("name")) s.set_name(doc["name"].get<std::string>());
    if (doc.contains("description")) s.set_description(doc["description"].get<std::string>());

    const auto& adm = field(doc, "admissible", "");
    if (!adm.is_array() || adm.size() != states.size())
        throw ScenarioFormatError("admissible: expected one list of controls per state");
    for (std::size_t x = 0; x < adm.size(); ++x) {
        const std::string path = "admissible[" + std::to_string(x) + "]";
        if (!adm[x].is_array()) throw ScenarioFormatError(path + ": expected an array");
        std::vector<ControlId> us;
        for (std::size_t k = 0; k < adm[x].size(); ++k)
            us.emplace_back(index_of(adm[x][k], controls, path + "[" + std::to_string(k) + "]"));
        s.set_admissible(StateId{x}, std::move(us));
    }

    s.set_beta(number(field(doc, "beta", ""), "beta"));
    s.set_true_param(ParamId{index_of(field(doc, "true_param", ""), params, "true_param")});
    if (doc.contains("initial_state")) s.set_initial_state(StateId{index_of(doc["initial_state"], states, "initial_state")});
    if (doc.contains("degenerate_prior_allowed")) {
        if (!doc["degenerate_prior_allowed"].is_boolean())
            throw ScenarioFormatError("degenerate_prior_allowed: expected true or false");
        s.set_degenerate_prior_allowed(doc["degenerate_prior_allowed"].get<bool>());
    }
    if (doc.contains("prior")) {
        auto prior = numbers(doc["prior"], "prior");
        if (prior.size() != params.size()) throw ScenarioFormatError("prior: expected one probability per param");
        try {
            s.set_prior(Belief(std::move(prior)));
        } catch (const ModelError& e) {
            throw ScenarioFormatError(std::string("prior: ") + e.what());
        }
    }

    const auto& rewards = field(doc, "rewards", "");
    if (!rewards.is_array()) throw ScenarioFormatError("rewards: expected an array");
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        const std::string path = "rewards[" + std::to_string(i) + "]";
        const auto& r = rewards[i];
        const StateId x{index_of(field(r, "state", path), states, join(path, "state"))};
        const ControlId u{index_of(field(r, "control", path), controls, join(path, "control"))};
        const RewardModel m = reward_model(field(r, "model", path), join(path, "model"));
        // A missing "param" applies the model to every parameter.
        if (!r.contains("param")) {
            s.set_shared_reward(x, u, m);
        } else {
            s.set_reward(ParamId{index_of(r["param"], params, join(path, "param"))}, x, u, m);
        }
    }

    const auto& transitions = field(doc, "transitions", "");
    if (!transitions.is_array()) throw ScenarioFormatError("transitions: expected an array");
    for (std::size_t i = 0; i < transitions.size(); ++i) {
        const std::string path = "transitions[" + std::to_string(i) + "]";
        const auto& t = transitions[i];
        const StateId x{index_of(field(t, "state", path), states, join(path, "state"))};
        const ControlId u{index_of(field(t, "control", path), controls, join(path, "control"))};
        auto row = numbers(field(t, "probs", path), join(path, "probs"));
        if (row.size() != states.size()) throw ScenarioFormatError(join(path, "probs") + ": expected one entry per state");
        if (!t.contains("param")) {
            s.set_shared_transition(x, u, row);
        } else {
            s.set_transition(ParamId{index_of(t["param"], params, join(path, "param"))}, x, u, std::move(row));
        }
    }
    return s;
}

/// Parses JSON text; syntax errors report line and column.
inline Scenario scenario_from_string(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioFormatError(e.what());
    }
    try {
        return scenario_from_json(doc);
    } catch (const nlohmann::json::exception& e) {
        throw ScenarioFormatError(e.what());
    }
}

inline Scenario scenario_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioFormatError(path + ": cannot open file");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return scenario_from_string(buf.str());
    } catch (const ScenarioFormatError& e) {
        throw ScenarioFormatError(path + ": " + e.what());
    }
}

/// Inverse of scenario_from_json; every (param, state, control) is written out.
inline nlohmann::json scenario_to_json(const Scenario& s) {
    using json = nlohmann::json;
    json doc;
    doc["name"] = s.name();
    doc["description"] = s.description();
    doc["params"] = s.param_names();
    doc["states"] = s.state_names();
    doc["controls"] = s.control_names();
    json adm = json::array();
    for (std::size_t x = 0; x < s.n_states(); ++x) {
        json us = json::array();
        for (const ControlId u : s.admissible(StateId{x})) us.push_back(u.value);
        adm.push_back(us);
    }
    doc["admissible"] = adm;
    doc["beta"] = s.beta();
    doc["prior"] = std::vector<double>(s.prior().probs().begin(), s.prior().probs().end());
    doc["true_param"] = s.true_param().value;
    doc["initial_state"] = s.initial_state().value;
    doc["degenerate_prior_allowed"] = s.degenerate_prior_allowed();
    json rewards = json::array();
    json transitions = json::array();
    for (std::size_t p = 0; p < s.n_params(); ++p) {
        for (std::size_t x = 0; x < s.n_states(); ++x) {
            for (const ControlId u : s.admissible(StateId{x})) {
                const ParamId pp{p};
                const StateId sx{x};
                if (s.has_reward(pp, sx, u)) {
                    json model = std::visit(detail::overloaded{
                                                [](const Categorical& c) {
                                                    return json{{"type", "categorical"}, {"support", c.support}, {"probs", c.probs}};
                                                },
                                                [](const TruncatedGaussian& g) {
                                                    return json{{"type", "truncated_gaussian"}, {"mean", g.mean},
                                                                {"variance", g.variance}, {"lo", g.lo}, {"hi", g.hi}};
                                                },
                                            },
                                            s.reward(pp, sx, u));
                    rewards.push_back({{"param", p}, {"state", x}, {"control", u.value}, {"model", model}});
                }
                const auto row = s.transition_row_raw(pp, sx, u);
                if (!row.empty())
                    transitions.push_back({{"param", p}, {"state", x}, {"control", u.value},
                                           {"probs", std::vector<double>(row.begin(), row.end())}});
            }
        }
    }
    doc["rewards"] = rewards;
    doc["transitions"] = transitions;
    return doc;
}

}  // namespace tsregret
