#include "btx/bt.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

namespace btx {

std::string to_string(node_kind k) {
    switch (k) {
        case node_kind::sequence: return "sequence";
        case node_kind::fallback: return "fallback";
        case node_kind::condition: return "condition";
        case node_kind::action: return "action";
    }
    return "?";
}

node_kind node_kind_from_string(const std::string& s) {
    if (s == "sequence") return node_kind::sequence;
    if (s == "fallback" || s == "selector") return node_kind::fallback;
    if (s == "condition") return node_kind::condition;
    if (s == "action") return node_kind::action;
    fail(errc::parse, "unknown node kind '" + s + "'");
}

bool rule_condition::matches(const assignment& inputs, const std::string& action) const {
    value actual;
    if (variable == "$action") {
        actual = value(action);
    } else {
        auto it = inputs.find(variable);
        if (it == inputs.end())
            fail(errc::missing_variable, "rule condition reads unassigned '" + variable + "'");
        actual = it->second;
    }
    auto as_num = [](const value& v) { return v.is_bool() ? (v.as_bool() ? 1.0 : 0.0) : v.as_number(); };
    switch (op) {
        case cmp::eq: return actual == operand;
        case cmp::ne: return actual != operand;
        case cmp::lt: return as_num(actual) < as_num(operand);
        case cmp::le: return as_num(actual) <= as_num(operand);
        case cmp::gt: return as_num(actual) > as_num(operand);
        case cmp::ge: return as_num(actual) >= as_num(operand);
    }
    return false;
}

behaviour_registry& behaviour_registry::instance() {
    static behaviour_registry reg;
    return reg;
}

void behaviour_registry::register_decide(const std::string& name,
                                         std::function<std::string(const assignment&)> fn) {
    decide_[name] = std::move(fn);
}

void behaviour_registry::register_effect(const std::string& name,
                                         std::function<assignment(const assignment&)> fn) {
    effect_[name] = std::move(fn);
}

void behaviour_registry::register_return(
    const std::string& name, std::function<status(const std::string&, const assignment&)> fn) {
    return_[name] = std::move(fn);
}

std::function<std::string(const assignment&)>
behaviour_registry::decide(const std::string& name) const {
    auto it = decide_.find(name);
    if (it == decide_.end()) fail(errc::parse, "unknown decide builtin '" + name + "'");
    return it->second;
}

std::function<assignment(const assignment&)>
behaviour_registry::effect(const std::string& name) const {
    auto it = effect_.find(name);
    if (it == effect_.end()) fail(errc::parse, "unknown effect builtin '" + name + "'");
    return it->second;
}

std::function<status(const std::string&, const assignment&)>
behaviour_registry::ret(const std::string& name) const {
    auto it = return_.find(name);
    if (it == return_.end()) fail(errc::parse, "unknown return builtin '" + name + "'");
    return it->second;
}

namespace {

std::vector<rule_condition> conditions_from_json(const nlohmann::json& j) {
    std::vector<rule_condition> out;
    for (auto it = j.begin(); it != j.end(); ++it) {
        rule_condition c;
        c.variable = it.key();
        if (it.value().is_object()) {
            const std::string op = it.value().at("op").get<std::string>();
            static const std::map<std::string, rule_condition::cmp> ops = {
                {"eq", rule_condition::cmp::eq}, {"ne", rule_condition::cmp::ne},
                {"lt", rule_condition::cmp::lt}, {"le", rule_condition::cmp::le},
                {"gt", rule_condition::cmp::gt}, {"ge", rule_condition::cmp::ge},
            };
            auto oit = ops.find(op);
            if (oit == ops.end()) fail(errc::parse, "unknown rule comparison '" + op + "'");
            c.op = oit->second;
            c.operand = json_to_value(it.value().at("value"));
        } else {
            c.op = rule_condition::cmp::eq;
            c.operand = json_to_value(it.value());
        }
        out.push_back(std::move(c));
    }
    return out;
}

template <typename Out, typename Parse>
rule_table<Out> table_from_json(const nlohmann::json& j, Parse parse) {
    rule_table<Out> t;
    if (j.contains("rules")) {
        for (const auto& rj : j.at("rules")) {
            typename rule_table<Out>::row r;
            r.when = conditions_from_json(rj.at("when"));
            r.out = parse(rj.at("value"));
            t.rows.push_back(std::move(r));
        }
    }
    t.fallback = parse(j.at("default"));
    return t;
}

leaf_behaviour behaviour_from_json(const nlohmann::json& j, node_kind kind) {
    leaf_behaviour b;
    b.spec = j;
    if (j.contains("delta_t")) b.delta_t = j.at("delta_t").get<double>();
    const auto& reg = behaviour_registry::instance();

    if (j.contains("return")) {
        const auto& rj = j.at("return");
        if (rj.is_object() && rj.contains("builtin")) {
            b.ret = reg.ret(rj.at("builtin").get<std::string>());
        } else {
            auto table = table_from_json<status>(
                rj, [](const nlohmann::json& v) { return status_from_string(v.get<std::string>()); });
            b.ret = [table](const std::string& action, const assignment& inputs) {
                return table.select(inputs, action);
            };
        }
    }
    if (kind != node_kind::action) return b;

    if (j.contains("decide")) {
        const auto& dj = j.at("decide");
        if (dj.is_object() && dj.contains("builtin")) {
            b.decide = reg.decide(dj.at("builtin").get<std::string>());
        } else {
            auto table = table_from_json<std::string>(
                dj, [](const nlohmann::json& v) { return v.get<std::string>(); });
            b.decide = [table](const assignment& inputs) { return table.select(inputs, ""); };
        }
    }
    if (j.contains("effect")) {
        const auto& ej = j.at("effect");
        if (ej.is_object() && ej.contains("builtin")) {
            b.effect = reg.effect(ej.at("builtin").get<std::string>());
        } else {
            auto table = table_from_json<assignment>(
                ej, [](const nlohmann::json& v) { return assignment_from_json(v); });
            b.effect = [table](const assignment& inputs) { return table.select(inputs, ""); };
        }
    }
    return b;
}

std::unique_ptr<bt_node> node_from_json(const nlohmann::json& j) {
    auto n = std::make_unique<bt_node>();
    n->id = j.at("id").get<std::string>();
    n->kind = node_kind_from_string(j.at("kind").get<std::string>());
    if (n->is_composite()) {
        if (!j.contains("children")) fail(errc::parse, "composite '" + n->id + "' has no children");
        for (const auto& cj : j.at("children")) n->children.push_back(node_from_json(cj));
        return n;
    }
    if (j.contains("children")) fail(errc::parse, "leaf '" + n->id + "' cannot have children");
    if (j.contains("inputs")) n->inputs = j.at("inputs").get<std::vector<std::string>>();
    if (j.contains("outputs")) n->outputs = j.at("outputs").get<std::vector<std::string>>();
    if (n->kind == node_kind::action) {
        if (j.contains("actions")) n->actions = j.at("actions").get<std::vector<std::string>>();
        if (std::find(n->actions.begin(), n->actions.end(), noop_action) == n->actions.end())
            n->actions.insert(n->actions.begin(), noop_action);
    }
    if (j.contains("behaviour")) n->behaviour = behaviour_from_json(j.at("behaviour"), n->kind);
    return n;
}

nlohmann::json node_to_json(const bt_node& n) {
    nlohmann::json out{{"id", n.id}, {"kind", to_string(n.kind)}};
    if (n.is_composite()) {
        auto& arr = out["children"] = nlohmann::json::array();
        for (const auto& c : n.children) arr.push_back(node_to_json(*c));
        return out;
    }
    if (!n.inputs.empty()) out["inputs"] = n.inputs;
    if (!n.outputs.empty()) out["outputs"] = n.outputs;
    if (n.kind == node_kind::action) out["actions"] = n.actions;
    if (!n.behaviour.spec.is_null()) out["behaviour"] = n.behaviour.spec;
    return out;
}

} // namespace

bt_tree::bt_tree(std::unique_ptr<bt_node> root) : root_(std::move(root)) {
    if (!root_) fail(errc::validation, "tree has no root");
    index(root_.get(), nullptr);
}

void bt_tree::index(const bt_node* n, const bt_node* parent) {
    if (!by_id_.emplace(n->id, n).second)
        fail(errc::validation, "duplicate node id '" + n->id + "'");
    parent_[n] = parent;
    preorder_.push_back(n);
    if (n->is_leaf()) leaves_.push_back(n);
    for (const auto& c : n->children) index(c.get(), n);
}

const bt_node& bt_tree::node(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) fail(errc::unknown_node, "unknown node '" + id + "'");
    return *it->second;
}

bool bt_tree::has_node(const std::string& id) const { return by_id_.count(id) > 0; }

const bt_node* bt_tree::parent(const bt_node& n) const {
    auto it = parent_.find(&n);
    if (it == parent_.end()) fail(errc::unknown_node, "node '" + n.id + "' not in this tree");
    return it->second;
}

const bt_node* bt_tree::left_sibling(const bt_node& n) const {
    const bt_node* p = parent(n);
    if (!p) return nullptr;
    const bt_node* prev = nullptr;
    for (const auto& c : p->children) {
        if (c.get() == &n) return prev;
        prev = c.get();
    }
    fail(errc::unknown_node, "node '" + n.id + "' not a child of its parent");
}

const bt_node& bt_tree::leftmost_child(const bt_node& n) const {
    if (n.children.empty()) fail(errc::unknown_node, "node '" + n.id + "' has no children");
    return *n.children.front();
}

bool bt_tree::is_leftmost(const bt_node& n) const {
    const bt_node* p = parent(n);
    return p != nullptr && p->children.front().get() == &n;
}

void bt_tree::validate(const state_model& sm) const {
    for (const bt_node* n : preorder_) {
        if (n->id.empty() || n->id.find('.') != std::string::npos ||
            n->id.find_first_of(" \t\n") != std::string::npos)
            fail(errc::validation, "bad node id '" + n->id + "'");
        if (n->is_composite()) {
            if (n->children.size() < 2)
                fail(errc::validation, "composite '" + n->id + "' needs at least 2 children");
            if (!n->inputs.empty() || !n->outputs.empty() || !n->actions.empty())
                fail(errc::validation, "composite '" + n->id + "' carries leaf payload");
            continue;
        }
        for (const auto& x : n->inputs)
            if (!sm.has_variable(x))
                fail(errc::missing_variable, "leaf '" + n->id + "' reads undeclared '" + x + "'");
        if (n->kind == node_kind::condition) {
            if (!n->outputs.empty())
                fail(errc::validation, "condition '" + n->id + "' must not write variables");
            if (!n->actions.empty())
                fail(errc::validation, "condition '" + n->id + "' must not declare actions");
            if (!n->behaviour.ret)
                fail(errc::validation, "condition '" + n->id + "' has no return function");
            continue;
        }
        // action leaf
        if (std::find(n->actions.begin(), n->actions.end(), noop_action) == n->actions.end())
            fail(errc::validation, "action leaf '" + n->id + "' is missing the null action");
        if (!n->behaviour.decide || !n->behaviour.ret)
            fail(errc::validation, "action leaf '" + n->id + "' needs decide and return functions");
        if (!n->outputs.empty() && !n->behaviour.effect)
            fail(errc::validation, "action leaf '" + n->id + "' writes variables but has no effect");
        for (const auto& y : n->outputs) {
            if (!sm.has_variable(y))
                fail(errc::missing_variable, "leaf '" + n->id + "' writes undeclared '" + y + "'");
            // Derived variables are determined by their state-model parents;
            // only top-level variables may be set by the tree.
            if (!sm.is_top_level(y))
                fail(errc::validation,
                     "leaf '" + n->id + "' writes derived variable '" + y + "'");
        }
    }
}

bt_tree bt_tree::from_json(const nlohmann::json& j) {
    return bt_tree(node_from_json(j.at("root")));
}

nlohmann::json bt_tree::to_json() const { return nlohmann::json{{"root", node_to_json(*root_)}}; }

domain domain::load(const nlohmann::json& tree_json, const nlohmann::json& model_json,
                    const assignment& init, const std::string& name) {
    domain d;
    d.name = name;
    d.model = std::make_shared<state_model>(state_model::from_json(model_json));
    d.tree = std::make_shared<bt_tree>(bt_tree::from_json(tree_json));
    d.tree->validate(*d.model);
    d.default_init = init;
    return d;
}

} // namespace btx
