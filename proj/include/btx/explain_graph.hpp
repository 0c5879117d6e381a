#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "btx/bt.hpp"
#include "btx/state_model.hpp"

namespace btx {

/// A variable of the explanation model: the execution flag, return status or
/// decision of a tree node, or a temporal version of a state variable.
struct expl_var {
    enum class facet { exec, ret, decision, state };

    facet f = facet::exec;
    std::string id; // node id, or state variable name
    int version = 0; // state versions only

    static expl_var exec(std::string node_id) { return {facet::exec, std::move(node_id), 0}; }
    static expl_var ret(std::string node_id) { return {facet::ret, std::move(node_id), 0}; }
    static expl_var decision(std::string node_id) { return {facet::decision, std::move(node_id), 0}; }
    static expl_var state(std::string name, int version) {
        return {facet::state, std::move(name), version};
    }

    bool operator==(const expl_var& o) const {
        return f == o.f && id == o.id && version == o.version;
    }
    bool operator<(const expl_var& o) const {
        if (f != o.f) return f < o.f;
        if (id != o.id) return id < o.id;
        return version < o.version;
    }

    /// "E.<id>", "r.<id>", "d.<id>" or "<name>.<version>".
    std::string to_string() const;
};

/// Declared range of an explanation-model variable, with a deterministic
/// enumeration order for the counterfactual search.
struct model_range {
    enum class kind { boolean, statuses, actions, state };
    kind k = kind::boolean;
    std::vector<status> statuses;     // ret variables
    std::vector<std::string> actions; // decision variables
    var_range state;                  // state versions

    bool contains(const value& v) const;
    std::vector<value> candidates(const value& actual, int bins) const;
    nlohmann::json to_json() const;
};

/// How a variable's value is computed from its parents.
enum class eval_class {
    exec_root,      // constant true
    exec_leftmost,  // parent's execution flag
    exec_sibling,   // left sibling succeeded (sequence) / failed (fallback)
    ret_leaf,       // Invalid unless executed, else the leaf's return function
    ret_composite,  // Invalid unless executed, else the composition rule
    decision,       // noop unless executed, else the leaf's policy
    state_initial,  // top-level variable at the start of the tick (exogenous)
    state_carry,    // unwritten later version of a top-level variable
    state_derived,  // structural function over parent versions
    state_internal, // written by an action leaf, else carried from before
    state_isolated, // derived initial version never read by any leaf
};

/// Evaluation context: the flat state at the start of the anchoring tick,
/// needed by exogenous versions and by written versions with no predecessor.
struct eval_ctx {
    const assignment* tick_initial = nullptr;
};

/// The compiled explanation model M = (G, R, F): a DAG over expl_vars with
/// per-variable ranges and deterministic evaluators, spanning a single tick.
class expl_model {
public:
    static expl_model build(std::shared_ptr<const bt_tree> tree,
                            std::shared_ptr<const state_model> sm);

    int size() const { return static_cast<int>(vars_.size()); }
    const expl_var& var(int i) const { return vars_[static_cast<size_t>(i)]; }
    int index_of(const expl_var& v) const; // throws unknown_variable
    bool contains(const expl_var& v) const { return index_.count(v) > 0; }

    const std::vector<int>& parents(int i) const { return parents_[static_cast<size_t>(i)]; }
    const std::vector<int>& children(int i) const { return children_[static_cast<size_t>(i)]; }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    /// Variable indices ordered so that parents precede children.
    const std::vector<int>& topo_order() const { return topo_; }
    /// Position of a variable in topo_order().
    int topo_rank(int i) const { return topo_rank_[static_cast<size_t>(i)]; }

    const model_range& range(int i) const { return ranges_[static_cast<size_t>(i)]; }
    eval_class cls(int i) const { return cls_[static_cast<size_t>(i)]; }
    /// Whether do() re-derives this variable when an ancestor is intervened.
    /// Exogenous versions and unwritten carries keep their observed values.
    bool reevaluable(int i) const;

    /// Evaluate one variable given a lookup for already-known values.
    value eval(int i, const std::function<value(int)>& lookup, const eval_ctx& ctx) const;

    /// Ancestors of a set of variables (excluding the set itself), sorted by
    /// topological rank.
    std::vector<int> ancestors_of(const std::vector<int>& targets) const;
    std::set<int> descendants_of(const std::vector<int>& sources) const;

    /// Final version counters and materialized versions per state variable.
    const std::map<std::string, int>& tau() const { return tau_; }
    std::vector<int> versions_of(const std::string& name) const;
    int last_version_of(const std::string& name) const;
    /// Leaf order position (0-based) after which a version becomes current;
    /// -1 for initial versions.
    int binding_position(int i) const { return binding_pos_[static_cast<size_t>(i)]; }

    const bt_tree& tree() const { return *tree_; }
    const state_model& sm() const { return *sm_; }

    nlohmann::json graph_json() const;
    std::string to_dot() const;

private:
    std::shared_ptr<const bt_tree> tree_;
    std::shared_ptr<const state_model> sm_;

    std::vector<expl_var> vars_;
    std::map<expl_var, int> index_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
    std::vector<int> topo_;
    std::vector<int> topo_rank_;
    std::vector<model_range> ranges_;
    std::vector<eval_class> cls_;
    std::vector<int> binding_pos_;
    std::map<std::string, int> tau_;

    // evaluator wiring
    struct node_meta {
        const bt_node* node = nullptr;
        int exec = -1, ret = -1, dec = -1;       // own variable indices
        int parent_exec = -1;                     // exec_leftmost
        int sibling_ret = -1;                     // exec_sibling
        node_kind parent_kind = node_kind::sequence;
        std::vector<int> child_rets;              // ret_composite, in child order
        std::map<std::string, int> read_versions; // input name -> state var index
    };
    std::map<std::string, node_meta> nodes_;
    struct state_meta {
        std::string writer;  // writing leaf id (state_internal)
        int prev = -1;       // previous materialized version index
        std::map<std::string, int> fn_parents; // parent name -> version index (state_derived)
    };
    std::vector<state_meta> state_meta_;

    int add_var(expl_var v, model_range r, eval_class c, int binding_pos);
    void add_edge(int from, int to);
    void finalize();

    friend struct expl_model_builder;
};

/// Evaluate the whole model in topological order from a tick's initial flat
/// state, as if the tick ran to completion. Used by replay-fidelity checks.
std::map<int, value> evaluate_full(const expl_model& m, const assignment& tick_initial);

} // namespace btx
