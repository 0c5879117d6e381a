#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "btx/state_model.hpp"
#include "btx/value.hpp"

namespace btx {

enum class node_kind { sequence, fallback, condition, action };

std::string to_string(node_kind k);
node_kind node_kind_from_string(const std::string& s);

/// Symbol used for the null action. Always present in a leaf's action set.
inline const std::string noop_action = "noop";

/// One row of a rule table. All conditions must hold for the row to fire;
/// the first firing row wins, otherwise the table's default applies.
struct rule_condition {
    enum class cmp { eq, ne, lt, le, gt, ge };
    std::string variable; // or "$action" when matching the chosen action
    cmp op = cmp::eq;
    value operand;

    bool matches(const assignment& inputs, const std::string& action) const;
};

template <typename Out>
struct rule_table {
    struct row {
        std::vector<rule_condition> when;
        Out out;
    };
    std::vector<row> rows;
    Out fallback;

    const Out& select(const assignment& inputs, const std::string& action) const {
        for (const auto& r : rows) {
            bool ok = true;
            for (const auto& c : r.when)
                if (!c.matches(inputs, action)) {
                    ok = false;
                    break;
                }
            if (ok) return r.out;
        }
        return fallback;
    }
};

/// The three behaviour functions of a leaf. Each is either a rule table or a
/// named builtin; all must be pure.
struct leaf_behaviour {
    // decide: inputs -> action (action leaves)
    std::function<std::string(const assignment&)> decide;
    // effect: inputs -> writes over the output set (action leaves)
    std::function<assignment(const assignment&)> effect;
    // ret: (action, inputs) -> status; action is empty for condition leaves
    std::function<status(const std::string&, const assignment&)> ret;
    double delta_t = 1.0; // recorded, unused by the tick semantics

    nlohmann::json spec; // serialized form, kept verbatim for round-trips
};

/// Registry of builtin behaviour functions, referenced by name from tree
/// definition files.
class behaviour_registry {
public:
    static behaviour_registry& instance();

    void register_decide(const std::string& name, std::function<std::string(const assignment&)> fn);
    void register_effect(const std::string& name, std::function<assignment(const assignment&)> fn);
    void register_return(const std::string& name,
                         std::function<status(const std::string&, const assignment&)> fn);

    std::function<std::string(const assignment&)> decide(const std::string& name) const;
    std::function<assignment(const assignment&)> effect(const std::string& name) const;
    std::function<status(const std::string&, const assignment&)> ret(const std::string& name) const;

private:
    std::map<std::string, std::function<std::string(const assignment&)>> decide_;
    std::map<std::string, std::function<assignment(const assignment&)>> effect_;
    std::map<std::string, std::function<status(const std::string&, const assignment&)>> return_;
};

struct bt_node {
    std::string id;
    node_kind kind = node_kind::condition;
    std::vector<std::unique_ptr<bt_node>> children;

    // leaf payload
    std::vector<std::string> inputs;  // X_i
    std::vector<std::string> outputs; // Y_i (action leaves)
    std::vector<std::string> actions; // A_i incl. noop (action leaves)
    leaf_behaviour behaviour;

    bool is_leaf() const { return kind == node_kind::condition || kind == node_kind::action; }
    bool is_composite() const { return !is_leaf(); }
};

/// An immutable behaviour tree plus navigation indices.
class bt_tree {
public:
    explicit bt_tree(std::unique_ptr<bt_node> root);
    bt_tree(bt_tree&&) = default;
    bt_tree& operator=(bt_tree&&) = default;

    const bt_node& root() const { return *root_; }
    const bt_node& node(const std::string& id) const;
    bool has_node(const std::string& id) const;

    const bt_node* parent(const bt_node& n) const;
    const bt_node* left_sibling(const bt_node& n) const;
    const bt_node& leftmost_child(const bt_node& n) const;
    bool is_leftmost(const bt_node& n) const;

    /// All nodes in depth-first preorder (root first, children left to right).
    const std::vector<const bt_node*>& preorder() const { return preorder_; }
    /// Leaves from left to right.
    const std::vector<const bt_node*>& leaves() const { return leaves_; }

    /// Structural checks plus coupling checks against the state model:
    /// every input/output declared, outputs top-level, condition constraints.
    void validate(const state_model& sm) const;

    static bt_tree from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    std::unique_ptr<bt_node> root_;
    std::map<std::string, const bt_node*> by_id_;
    std::map<const bt_node*, const bt_node*> parent_;
    std::vector<const bt_node*> preorder_;
    std::vector<const bt_node*> leaves_;

    void index(const bt_node* n, const bt_node* parent);
};

/// A tree paired with the state model it reads from and writes to.
struct domain {
    std::string name;
    std::shared_ptr<const bt_tree> tree;
    std::shared_ptr<const state_model> model;
    assignment default_init; // top-level assignment

    static domain load(const nlohmann::json& tree_json, const nlohmann::json& model_json,
                       const assignment& init, const std::string& name);
};

} // namespace btx
