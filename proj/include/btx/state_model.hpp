#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "btx/value.hpp"

namespace btx {

/// Expression tree for the structural functions of derived state variables.
struct expr {
    enum class op {
        constant,
        var_ref,
        logic_and,
        logic_or,
        logic_not,
        eq,
        ne,
        lt,
        le,
        gt,
        ge,
        add,
        sub,
        mul,
        neg,
        min,
        max,
        clamp01,
        if_then_else,
        hash01, // deterministic pseudo-noise over two numeric arguments
    };

    op kind = op::constant;
    value constant;                               // op::constant
    std::string var;                              // op::var_ref
    std::vector<std::shared_ptr<const expr>> args;

    value eval(const assignment& env) const;
    void collect_vars(std::set<std::string>& out) const;

    static std::shared_ptr<const expr> from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

using expr_ptr = std::shared_ptr<const expr>;

expr_ptr make_const(value v);
expr_ptr make_var(std::string name);
expr_ptr make_op(expr::op kind, std::vector<expr_ptr> args);

struct state_variable {
    std::string name;
    var_range range;
};

/// Causal model over the state: a DAG of variables, their ranges, and one
/// deterministic function per non-top-level variable.
class state_model {
public:
    std::vector<state_variable> variables;
    std::vector<std::pair<std::string, std::string>> edges; // parent -> child
    std::map<std::string, expr_ptr> functions;              // derived variable -> expr

    void validate() const;

    bool has_variable(const std::string& name) const;
    const state_variable& variable(const std::string& name) const;
    bool is_top_level(const std::string& name) const;

    std::vector<std::string> parents(const std::string& name) const;
    std::vector<std::string> top_level_variables() const;
    /// Transitive parents, excluding the variable itself, in declaration order.
    std::vector<std::string> ancestors(const std::string& name) const;
    /// All variables sorted so that parents precede children.
    std::vector<std::string> topological_order() const;

    /// Evaluate every derived variable from an assignment of exactly the
    /// top-level variables.
    assignment propagate(const assignment& top_level) const;
    /// Evaluate one derived variable against a full assignment.
    value eval_derived(const std::string& name, const assignment& full) const;

    static state_model from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;

private:
    void ensure_validated() const;
};

value json_to_value(const nlohmann::json& j);
nlohmann::json value_to_json(const value& v);
nlohmann::json assignment_to_json(const assignment& a);
assignment assignment_from_json(const nlohmann::json& j);

} // namespace btx
