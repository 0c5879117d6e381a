#include "btx/executor.hpp"

#include <algorithm>

namespace btx {

namespace {

struct tick_ctx {
    const bt_tree& tree;
    const state_model& sm;
    assignment& state;
    episodic_memory& memory;

    void emit_node(const bt_node& n, status st, const std::string& action = "") {
        memory.append(event::node_result(memory.length(), n.id, st, action));
    }

    void emit_state(const std::string& var, const value& v) {
        memory.append(event::state_change(memory.length(), var, v));
    }
};

assignment project(const assignment& state, const std::vector<std::string>& names) {
    assignment out;
    for (const auto& n : names) {
        auto it = state.find(n);
        if (it == state.end()) fail(errc::missing_variable, "state has no variable '" + n + "'");
        out[n] = it->second;
    }
    return out;
}

status tick_node(const bt_node& n, tick_ctx& ctx) {
    if (n.is_composite()) {
        status st = n.kind == node_kind::sequence ? status::success : status::failure;
        for (const auto& child : n.children) {
            status cs = tick_node(*child, ctx);
            if (n.kind == node_kind::sequence && cs != status::success) {
                st = cs;
                break;
            }
            if (n.kind == node_kind::fallback && cs != status::failure) {
                st = cs;
                break;
            }
        }
        ctx.emit_node(n, st);
        return st;
    }

    const assignment inputs = project(ctx.state, n.inputs);

    if (n.kind == node_kind::condition) {
        status st = n.behaviour.ret("", inputs);
        if (st != status::success && st != status::failure)
            fail(errc::validation, "condition '" + n.id + "' returned " + to_string(st));
        ctx.emit_node(n, st);
        return st;
    }

    // action leaf: decide, apply effects, then return
    const std::string action = n.behaviour.decide(inputs);
    if (std::find(n.actions.begin(), n.actions.end(), action) == n.actions.end())
        fail(errc::validation, "leaf '" + n.id + "' decided undeclared action '" + action + "'");

    if (!n.outputs.empty()) {
        assignment writes = n.behaviour.effect(inputs);
        for (const auto& [w, v] : writes)
            if (std::find(n.outputs.begin(), n.outputs.end(), w) == n.outputs.end())
                fail(errc::validation, "effect of '" + n.id + "' wrote undeclared '" + w + "'");
        for (const auto& y : n.outputs) {
            auto it = writes.find(y);
            if (it == writes.end())
                fail(errc::missing_variable,
                     "effect of '" + n.id + "' did not produce output '" + y + "'");
            if (!ctx.sm.variable(y).range.contains(it->second))
                fail(errc::range_violation, "leaf '" + n.id + "' wrote out-of-range value " +
                                                it->second.to_string() + " to '" + y + "'");
            ctx.state[y] = it->second;
            ctx.emit_state(y, it->second); // emitted even when unchanged
        }
        // re-evaluate derived variables; log only actual changes
        for (const auto& name : ctx.sm.topological_order()) {
            if (ctx.sm.is_top_level(name)) continue;
            value v = ctx.sm.eval_derived(name, ctx.state);
            if (v != ctx.state.at(name)) {
                ctx.state[name] = v;
                ctx.emit_state(name, v);
            }
        }
    }

    status st = n.behaviour.ret(action, inputs);
    if (st == status::invalid)
        fail(errc::validation, "leaf '" + n.id + "' returned Invalid while executing");
    ctx.emit_node(n, st, action);
    return st;
}

} // namespace

status run_tick(const bt_tree& tree, const state_model& sm, assignment& state,
                episodic_memory& memory) {
    for (const auto& v : sm.variables) {
        auto it = state.find(v.name);
        if (it == state.end())
            fail(errc::missing_variable, "state has no value for '" + v.name + "'");
        if (!v.range.contains(it->second))
            fail(errc::range_violation,
                 "state value " + it->second.to_string() + " outside range of '" + v.name + "'");
    }
    std::int64_t tick_number = 1;
    for (const auto& e : memory.events())
        if (e.k == event::kind::tick_boundary) tick_number = e.tick + 1;
    tick_ctx ctx{tree, sm, state, memory};
    status root_status = tick_node(tree.root(), ctx);
    memory.append(event::tick_boundary(memory.length(), tick_number));
    return root_status;
}

std::vector<status> run(const domain& d, const assignment& top_level_init, int ticks,
                        episodic_memory& memory) {
    assignment state = d.model->propagate(top_level_init);
    memory.initial = state;
    memory.tree_name = d.name;
    memory.model_name = d.name;
    std::vector<status> out;
    for (int t = 0; t < ticks; ++t) out.push_back(run_tick(*d.tree, *d.model, state, memory));
    return out;
}

} // namespace btx
