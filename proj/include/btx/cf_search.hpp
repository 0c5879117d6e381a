#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "btx/explain_graph.hpp"
#include "btx/trace.hpp"

namespace btx {

/// Full model assignment recovered from the episodic memory as of event k.
struct reconstruction {
    std::map<int, value> values;
    std::int64_t k = 0;      // global event index
    std::int64_t tick = 1;   // 1-based tick containing k
    assignment tick_initial; // flat state at the start of that tick
};

reconstruction reconstruct(const expl_model& m, const episodic_memory& mem, std::int64_t k);

/// Do-operator: fix the intervened variables, then re-derive their
/// descendants in topological order. Variables without a mechanism
/// (tick-initial versions and unwritten carries) keep their observed values.
std::map<int, value> do_intervene(const expl_model& m, const std::map<int, value>& base,
                                  const std::vector<std::pair<int, value>>& interventions,
                                  const assignment& tick_initial);

/// Foil: the set of counterfactual outcomes the asker proposes. Discrete
/// values or closed numeric intervals.
struct foil_spec {
    std::vector<value> values;
    std::vector<std::pair<double, double>> intervals;

    bool matches(const value& v) const;
    bool empty() const { return values.empty() && intervals.empty(); }
};

/// A contrastive why(fact, foil) question about recorded execution.
struct query {
    std::vector<expl_var> targets;
    std::vector<value> facts;
    std::vector<foil_spec> foils;
    std::int64_t time = 0; // global event index

    static query from_json(const nlohmann::json& j, const expl_model& m,
                           const episodic_memory& mem);
    nlohmann::json to_json(const expl_model& m) const;
};

/// One explanation: reasons R (= actual values of the intervened variables),
/// the counterfactual condition J, and the resulting foil outcome K.
struct explanation {
    struct change {
        int var = -1;
        value actual;         // reason
        value counterfactual; // J
    };
    std::vector<change> changes;
    std::vector<std::pair<int, value>> outcome; // K: queried variable -> value

    int depth() const { return static_cast<int>(changes.size()); }
};

struct search_result {
    std::vector<explanation> explanations;
    int depth = 0;
    std::int64_t candidates_tested = 0;
    int searchable_variables = 0;
    std::int64_t node_time = 0; // the anchor as a node-execution index
    std::int64_t leaf_time = 0; // ... and counting leaf executions only
    query q;
    reconstruction recon;
};

/// Minimal-depth counterfactual search: enumerates every combination of up
/// to d_max ancestor interventions, in deterministic order, and returns all
/// hits at the shallowest depth that has any.
search_result counterfactual_search(const expl_model& m, const episodic_memory& mem,
                                    const query& q, int d_max, int bins);

/// Build the follow-up query for one reason of an explanation. Reasons on
/// tick-initial versions are re-anchored to the last version of the variable
/// at the end of the previous tick.
query make_follow_up(const expl_model& m, const episodic_memory& mem, const search_result& res,
                     int explanation_index, int reason_index);

nlohmann::json result_to_json(const expl_model& m, const search_result& res);

/// Uniform-bin candidate list for a continuous range; midpoints of all bins
/// except the one holding `actual`.
std::vector<value> discretize(const var_range& range, int bins, const value& actual);

} // namespace btx
