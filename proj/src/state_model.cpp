#include "btx/state_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <nlohmann/json.hpp>

#include "btx/rng.hpp"

namespace btx {

double hash01(double a, double b) {
    auto mix = [](std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(std::bit_cast<std::uint64_t>(a) + 0x9e3779b97f4a7c15ULL);
    h = mix(h ^ (std::bit_cast<std::uint64_t>(b) + 0x9e3779b97f4a7c15ULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace {

double num(const value& v) {
    if (v.is_bool()) return v.as_bool() ? 1.0 : 0.0;
    return v.as_number();
}

bool truthy(const value& v) {
    if (v.is_bool()) return v.as_bool();
    if (v.is_number()) return v.as_number() != 0.0;
    fail(errc::validation, "expected a boolean operand, got " + v.to_string());
}

const std::map<std::string, expr::op>& op_names() {
    static const std::map<std::string, expr::op> names = {
        {"and", expr::op::logic_and}, {"or", expr::op::logic_or},   {"not", expr::op::logic_not},
        {"eq", expr::op::eq},         {"ne", expr::op::ne},         {"lt", expr::op::lt},
        {"le", expr::op::le},         {"gt", expr::op::gt},         {"ge", expr::op::ge},
        {"add", expr::op::add},       {"sub", expr::op::sub},       {"mul", expr::op::mul},
        {"neg", expr::op::neg},       {"min", expr::op::min},       {"max", expr::op::max},
        {"clamp01", expr::op::clamp01}, {"if", expr::op::if_then_else}, {"hash01", expr::op::hash01},
    };
    return names;
}

std::string op_name(expr::op kind) {
    for (const auto& [name, op] : op_names())
        if (op == kind) return name;
    return "?";
}

} // namespace

value expr::eval(const assignment& env) const {
    switch (kind) {
        case op::constant: return constant;
        case op::var_ref: {
            auto it = env.find(var);
            if (it == env.end()) fail(errc::missing_variable, "unassigned variable '" + var + "'");
            return it->second;
        }
        case op::logic_and: {
            for (const auto& a : args)
                if (!truthy(a->eval(env))) return value(false);
            return value(true);
        }
        case op::logic_or: {
            for (const auto& a : args)
                if (truthy(a->eval(env))) return value(true);
            return value(false);
        }
        case op::logic_not: return value(!truthy(args[0]->eval(env)));
        case op::eq: return value(args[0]->eval(env) == args[1]->eval(env));
        case op::ne: return value(args[0]->eval(env) != args[1]->eval(env));
        case op::lt: return value(num(args[0]->eval(env)) < num(args[1]->eval(env)));
        case op::le: return value(num(args[0]->eval(env)) <= num(args[1]->eval(env)));
        case op::gt: return value(num(args[0]->eval(env)) > num(args[1]->eval(env)));
        case op::ge: return value(num(args[0]->eval(env)) >= num(args[1]->eval(env)));
        case op::add: {
            double s = 0;
            for (const auto& a : args) s += num(a->eval(env));
            return value(s);
        }
        case op::sub: return value(num(args[0]->eval(env)) - num(args[1]->eval(env)));
        case op::mul: {
            double s = 1;
            for (const auto& a : args) s *= num(a->eval(env));
            return value(s);
        }
        case op::neg: return value(-num(args[0]->eval(env)));
        case op::min: return value(std::min(num(args[0]->eval(env)), num(args[1]->eval(env))));
        case op::max: return value(std::max(num(args[0]->eval(env)), num(args[1]->eval(env))));
        case op::clamp01: return value(std::clamp(num(args[0]->eval(env)), 0.0, 1.0));
        case op::if_then_else:
            return truthy(args[0]->eval(env)) ? args[1]->eval(env) : args[2]->eval(env);
        case op::hash01: return value(hash01(num(args[0]->eval(env)), num(args[1]->eval(env))));
    }
    fail(errc::validation, "unreachable expression kind");
}

void expr::collect_vars(std::set<std::string>& out) const {
    if (kind == op::var_ref) out.insert(var);
    for (const auto& a : args) a->collect_vars(out);
}

expr_ptr make_const(value v) {
    auto e = std::make_shared<expr>();
    e->kind = expr::op::constant;
    e->constant = std::move(v);
    return e;
}

expr_ptr make_var(std::string name) {
    auto e = std::make_shared<expr>();
    e->kind = expr::op::var_ref;
    e->var = std::move(name);
    return e;
}

expr_ptr make_op(expr::op kind, std::vector<expr_ptr> args) {
    auto e = std::make_shared<expr>();
    e->kind = kind;
    e->args.assign(args.begin(), args.end());
    return e;
}

std::shared_ptr<const expr> expr::from_json(const nlohmann::json& j) {
    if (j.is_object() && j.contains("var")) return make_var(j.at("var").get<std::string>());
    if (j.is_object() && j.contains("const")) return make_const(json_to_value(j.at("const")));
    if (!j.is_object() || !j.contains("op"))
        fail(errc::parse, "expression must be {op,args}, {var} or {const}");
    const std::string name = j.at("op").get<std::string>();
    auto it = op_names().find(name);
    if (it == op_names().end()) fail(errc::parse, "unknown expression op '" + name + "'");
    std::vector<expr_ptr> args;
    if (j.contains("args"))
        for (const auto& a : j.at("args")) args.push_back(expr::from_json(a));
    static const std::map<expr::op, std::pair<size_t, size_t>> arity = {
        {op::logic_and, {1, 64}}, {op::logic_or, {1, 64}}, {op::logic_not, {1, 1}},
        {op::eq, {2, 2}},         {op::ne, {2, 2}},        {op::lt, {2, 2}},
        {op::le, {2, 2}},         {op::gt, {2, 2}},        {op::ge, {2, 2}},
        {op::add, {1, 64}},       {op::sub, {2, 2}},       {op::mul, {1, 64}},
        {op::neg, {1, 1}},        {op::min, {2, 2}},       {op::max, {2, 2}},
        {op::clamp01, {1, 1}},    {op::if_then_else, {3, 3}}, {op::hash01, {2, 2}},
    };
    auto [lo, hi] = arity.at(it->second);
    if (args.size() < lo || args.size() > hi)
        fail(errc::parse, "op '" + name + "' takes " + std::to_string(lo) + ".." +
                              std::to_string(hi) + " arguments");
    return make_op(it->second, std::move(args));
}

nlohmann::json expr::to_json() const {
    if (kind == op::var_ref) return nlohmann::json{{"var", var}};
    if (kind == op::constant) return nlohmann::json{{"const", value_to_json(constant)}};
    nlohmann::json out{{"op", op_name(kind)}};
    auto& arr = out["args"] = nlohmann::json::array();
    for (const auto& a : args) arr.push_back(a->to_json());
    return out;
}

bool state_model::has_variable(const std::string& name) const {
    for (const auto& v : variables)
        if (v.name == name) return true;
    return false;
}

const state_variable& state_model::variable(const std::string& name) const {
    for (const auto& v : variables)
        if (v.name == name) return v;
    fail(errc::unknown_variable, "undeclared state variable '" + name + "'");
}

bool state_model::is_top_level(const std::string& name) const {
    variable(name); // throws on unknown
    for (const auto& [p, c] : edges)
        if (c == name) return false;
    return true;
}

std::vector<std::string> state_model::parents(const std::string& name) const {
    variable(name);
    std::vector<std::string> out;
    for (const auto& v : variables)
        for (const auto& [p, c] : edges)
            if (c == name && p == v.name && std::find(out.begin(), out.end(), p) == out.end())
                out.push_back(v.name);
    return out;
}

std::vector<std::string> state_model::top_level_variables() const {
    std::vector<std::string> out;
    for (const auto& v : variables)
        if (is_top_level(v.name)) out.push_back(v.name);
    return out;
}

std::vector<std::string> state_model::ancestors(const std::string& name) const {
    variable(name);
    std::set<std::string> seen;
    std::vector<std::string> frontier{name};
    while (!frontier.empty()) {
        std::string cur = frontier.back();
        frontier.pop_back();
        for (const auto& [p, c] : edges) {
            if (c == cur && !seen.count(p)) {
                seen.insert(p);
                frontier.push_back(p);
            }
        }
    }
    std::vector<std::string> out;
    for (const auto& v : variables)
        if (seen.count(v.name)) out.push_back(v.name);
    return out;
}

std::vector<std::string> state_model::topological_order() const {
    std::map<std::string, int> indegree;
    for (const auto& v : variables) indegree[v.name] = 0;
    for (const auto& [p, c] : edges) indegree[c] += 1;
    std::vector<std::string> order;
    std::vector<std::string> ready;
    for (const auto& v : variables)
        if (indegree[v.name] == 0) ready.push_back(v.name);
    while (!ready.empty()) {
        std::string cur = ready.front();
        ready.erase(ready.begin());
        order.push_back(cur);
        for (const auto& v : variables) {
            for (const auto& [p, c] : edges) {
                if (p == cur && c == v.name && --indegree[c] == 0) ready.push_back(c);
            }
        }
    }
    if (order.size() != variables.size()) fail(errc::validation, "state graph contains a cycle");
    return order;
}

void state_model::validate() const {
    std::set<std::string> names;
    for (const auto& v : variables) {
        if (v.name.empty() || v.name.find('.') != std::string::npos ||
            v.name.find_first_of(" \t\n") != std::string::npos)
            fail(errc::validation, "bad state variable name '" + v.name + "'");
        if (!names.insert(v.name).second)
            fail(errc::validation, "duplicate state variable '" + v.name + "'");
        if (v.range.kind == range_kind::continuous && !(v.range.lo < v.range.hi))
            fail(errc::validation, "variable '" + v.name + "' has an empty continuous range");
        if (v.range.kind == range_kind::categorical && v.range.symbols.empty())
            fail(errc::validation, "variable '" + v.name + "' has an empty categorical range");
    }
    for (const auto& [p, c] : edges) {
        if (!names.count(p)) fail(errc::unknown_variable, "edge parent '" + p + "' undeclared");
        if (!names.count(c)) fail(errc::unknown_variable, "edge child '" + c + "' undeclared");
    }
    topological_order(); // throws on cycles
    for (const auto& v : variables) {
        const bool top = is_top_level(v.name);
        const bool has_fn = functions.count(v.name) > 0;
        if (top && has_fn)
            fail(errc::validation, "top-level variable '" + v.name + "' must not have a function");
        if (!top && !has_fn)
            fail(errc::validation, "derived variable '" + v.name + "' needs a function");
        if (has_fn) {
            std::set<std::string> used;
            functions.at(v.name)->collect_vars(used);
            auto ps = parents(v.name);
            for (const auto& u : used)
                if (std::find(ps.begin(), ps.end(), u) == ps.end())
                    fail(errc::validation, "function of '" + v.name + "' reads non-parent '" + u + "'");
        }
    }
}

void state_model::ensure_validated() const {}

assignment state_model::propagate(const assignment& top_level) const {
    for (const auto& [name, v] : top_level) {
        const auto& var = variable(name);
        if (!is_top_level(name))
            fail(errc::validation, "propagate input assigns derived variable '" + name + "'");
        if (!var.range.contains(v))
            fail(errc::range_violation, "value " + v.to_string() + " outside range of '" + name + "'");
    }
    assignment full = top_level;
    for (const auto& name : topological_order()) {
        if (is_top_level(name)) {
            if (!full.count(name))
                fail(errc::missing_variable, "top-level variable '" + name + "' unassigned");
            continue;
        }
        full[name] = eval_derived(name, full);
    }
    return full;
}

value state_model::eval_derived(const std::string& name, const assignment& full) const {
    auto it = functions.find(name);
    if (it == functions.end())
        fail(errc::unknown_variable, "variable '" + name + "' has no function");
    value v = it->second->eval(full);
    // Expressions over booleans evaluate to bools already; coerce numeric
    // results of comparison-free arithmetic into the declared range check.
    if (!variable(name).range.contains(v))
        fail(errc::range_violation,
             "function of '" + name + "' produced out-of-range value " + v.to_string());
    return v;
}

value json_to_value(const nlohmann::json& j) {
    if (j.is_boolean()) return value(j.get<bool>());
    if (j.is_number()) return value(j.get<double>());
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "Success" || s == "Failure" || s == "Running" || s == "Invalid")
            return value(status_from_string(s));
        return value(s);
    }
    fail(errc::parse, "expected scalar value, got " + j.dump());
}

nlohmann::json value_to_json(const value& v) {
    if (v.is_bool()) return v.as_bool();
    if (v.is_number()) return v.as_number();
    if (v.is_status()) return to_string(v.as_status());
    return v.as_symbol();
}

nlohmann::json assignment_to_json(const assignment& a) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : a) out[k] = value_to_json(v);
    return out;
}

assignment assignment_from_json(const nlohmann::json& j) {
    assignment out;
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = json_to_value(it.value());
    return out;
}

namespace {

var_range range_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "boolean") return var_range::boolean();
        fail(errc::parse, "unknown range '" + s + "'");
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "boolean") return var_range::boolean();
    if (kind == "categorical")
        return var_range::categorical(j.at("symbols").get<std::vector<std::string>>());
    if (kind == "continuous")
        return var_range::continuous(j.at("lo").get<double>(), j.at("hi").get<double>());
    fail(errc::parse, "unknown range kind '" + kind + "'");
}

nlohmann::json range_to_json(const var_range& r) {
    switch (r.kind) {
        case range_kind::boolean: return "boolean";
        case range_kind::categorical:
            return nlohmann::json{{"kind", "categorical"}, {"symbols", r.symbols}};
        case range_kind::continuous:
            return nlohmann::json{{"kind", "continuous"}, {"lo", r.lo}, {"hi", r.hi}};
    }
    return nullptr;
}

} // namespace

state_model state_model::from_json(const nlohmann::json& j) {
    state_model m;
    for (const auto& vj : j.at("variables")) {
        state_variable v;
        v.name = vj.at("name").get<std::string>();
        v.range = range_from_json(vj.at("range"));
        m.variables.push_back(std::move(v));
    }
    if (j.contains("edges"))
        for (const auto& e : j.at("edges"))
            m.edges.emplace_back(e.at(0).get<std::string>(), e.at(1).get<std::string>());
    if (j.contains("functions"))
        for (auto it = j.at("functions").begin(); it != j.at("functions").end(); ++it)
            m.functions[it.key()] = expr::from_json(it.value());
    m.validate();
    return m;
}

nlohmann::json state_model::to_json() const {
    nlohmann::json out;
    auto& vars = out["variables"] = nlohmann::json::array();
    for (const auto& v : variables)
        vars.push_back({{"name", v.name}, {"range", range_to_json(v.range)}});
    auto& es = out["edges"] = nlohmann::json::array();
    for (const auto& [p, c] : edges) es.push_back({p, c});
    auto& fs = out["functions"] = nlohmann::json::object();
    for (const auto& [name, fn] : functions) fs[name] = fn->to_json();
    return out;
}

} // namespace btx
