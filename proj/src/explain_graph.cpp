#include "btx/explain_graph.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

namespace btx {

std::string expl_var::to_string() const {
    switch (f) {
        case facet::exec: return "E." + id;
        case facet::ret: return "r." + id;
        case facet::decision: return "d." + id;
        case facet::state: return id + "." + std::to_string(version);
    }
    return "?";
}

bool model_range::contains(const value& v) const {
    switch (k) {
        case kind::boolean: return v.is_bool();
        case kind::statuses:
            return v.is_status() &&
                   std::find(statuses.begin(), statuses.end(), v.as_status()) != statuses.end();
        case kind::actions:
            return v.is_symbol() &&
                   std::find(actions.begin(), actions.end(), v.as_symbol()) != actions.end();
        case kind::state: return state.contains(v);
    }
    return false;
}

std::vector<value> model_range::candidates(const value& actual, int bins) const {
    std::vector<value> out;
    switch (k) {
        case kind::boolean:
            for (bool b : {false, true})
                if (value(b) != actual) out.push_back(value(b));
            break;
        case kind::statuses:
            for (status s : statuses)
                if (value(s) != actual) out.push_back(value(s));
            break;
        case kind::actions:
            for (const auto& a : actions)
                if (value(a) != actual) out.push_back(value(a));
            break;
        case kind::state: return state.candidates(actual, bins);
    }
    return out;
}

nlohmann::json model_range::to_json() const {
    switch (k) {
        case kind::boolean: return nlohmann::json::array({false, true});
        case kind::statuses: {
            auto arr = nlohmann::json::array();
            for (status s : statuses) arr.push_back(to_string(s));
            return arr;
        }
        case kind::actions: {
            auto arr = nlohmann::json::array();
            for (const auto& a : actions) arr.push_back(a);
            return arr;
        }
        case kind::state:
            if (state.kind == range_kind::boolean) return nlohmann::json::array({false, true});
            if (state.kind == range_kind::categorical) {
                auto arr = nlohmann::json::array();
                for (const auto& s : state.symbols) arr.push_back(s);
                return arr;
            }
            return nlohmann::json{{"lo", state.lo}, {"hi", state.hi}};
    }
    return nullptr;
}

int expl_model::index_of(const expl_var& v) const {
    auto it = index_.find(v);
    if (it == index_.end())
        fail(errc::unknown_variable, "no model variable '" + v.to_string() + "'");
    return it->second;
}

bool expl_model::reevaluable(int i) const {
    switch (cls(i)) {
        case eval_class::state_initial:
        case eval_class::state_isolated:
        case eval_class::state_carry: return false;
        default: return true;
    }
}

int expl_model::add_var(expl_var v, model_range r, eval_class c, int binding_pos) {
    int idx = static_cast<int>(vars_.size());
    if (!index_.emplace(v, idx).second)
        fail(errc::validation, "duplicate model variable '" + v.to_string() + "'");
    vars_.push_back(std::move(v));
    ranges_.push_back(std::move(r));
    cls_.push_back(c);
    binding_pos_.push_back(binding_pos);
    state_meta_.emplace_back();
    return idx;
}

void expl_model::add_edge(int from, int to) {
    auto e = std::make_pair(from, to);
    if (std::find(edges_.begin(), edges_.end(), e) == edges_.end()) edges_.push_back(e);
}

void expl_model::finalize() {
    parents_.assign(vars_.size(), {});
    children_.assign(vars_.size(), {});
    for (const auto& [a, b] : edges_) {
        parents_[static_cast<size_t>(b)].push_back(a);
        children_[static_cast<size_t>(a)].push_back(b);
    }
    for (auto& ps : parents_) std::sort(ps.begin(), ps.end());
    for (auto& cs : children_) std::sort(cs.begin(), cs.end());

    // Kahn's algorithm with insertion-order tie-breaking
    std::vector<int> indegree(vars_.size(), 0);
    for (const auto& [a, b] : edges_) indegree[static_cast<size_t>(b)] += 1;
    std::vector<int> ready;
    for (int i = 0; i < size(); ++i)
        if (indegree[static_cast<size_t>(i)] == 0) ready.push_back(i);
    topo_.clear();
    while (!ready.empty()) {
        int cur = ready.front();
        ready.erase(ready.begin());
        topo_.push_back(cur);
        std::vector<int> next;
        for (int c : children_[static_cast<size_t>(cur)])
            if (--indegree[static_cast<size_t>(c)] == 0) next.push_back(c);
        std::sort(next.begin(), next.end());
        ready.insert(ready.end(), next.begin(), next.end());
        std::sort(ready.begin(), ready.end());
    }
    if (topo_.size() != vars_.size())
        fail(errc::validation, "explanation model contains a cycle");
    topo_rank_.assign(vars_.size(), 0);
    for (int rank = 0; rank < size(); ++rank) topo_rank_[static_cast<size_t>(topo_[rank])] = rank;
}

struct expl_model_builder {
    expl_model m;
    const bt_tree& tree;
    const state_model& sm;
    std::map<std::string, int> tau;                 // latest counter per state variable
    std::map<std::pair<std::string, int>, int> mat; // (name, version) -> var index

    expl_model_builder(std::shared_ptr<const bt_tree> t, std::shared_ptr<const state_model> s)
        : tree(*t), sm(*s) {
        m.tree_ = std::move(t);
        m.sm_ = std::move(s);
    }

    int ensure_state(const std::string& name, int version, int binding_pos) {
        auto key = std::make_pair(name, version);
        auto it = mat.find(key);
        if (it != mat.end()) return it->second;
        model_range r;
        r.k = model_range::kind::state;
        r.state = sm.variable(name).range;
        // class is provisional; classify() settles it once writers are known
        int idx = m.add_var(expl_var::state(name, version), std::move(r), eval_class::state_initial,
                            binding_pos);
        mat[key] = idx;
        return idx;
    }

    void graph_from_structure() {
        for (const bt_node* n : tree.preorder()) {
            auto& meta = m.nodes_[n->id];
            meta.node = n;
            meta.exec = m.add_var(expl_var::exec(n->id),
                                  model_range{model_range::kind::boolean, {}, {}, {}},
                                  eval_class::exec_root, -1);
            model_range rr;
            rr.k = model_range::kind::statuses;
            if (n->kind == node_kind::condition)
                rr.statuses = {status::success, status::failure, status::invalid};
            else
                rr.statuses = {status::running, status::success, status::failure, status::invalid};
            meta.ret = m.add_var(expl_var::ret(n->id), std::move(rr),
                                 n->is_leaf() ? eval_class::ret_leaf : eval_class::ret_composite, -1);
            if (n->kind == node_kind::action) {
                model_range dr;
                dr.k = model_range::kind::actions;
                dr.actions = n->actions;
                meta.dec = m.add_var(expl_var::decision(n->id), std::move(dr),
                                     eval_class::decision, -1);
            }
        }
        for (const bt_node* n : tree.preorder()) {
            auto& meta = m.nodes_[n->id];
            m.add_edge(meta.exec, meta.ret);
            if (n->kind == node_kind::action) {
                m.add_edge(meta.exec, meta.dec);
                m.add_edge(meta.dec, meta.ret);
            }
            if (n->is_composite())
                for (const auto& c : n->children) {
                    meta.child_rets.push_back(m.nodes_[c->id].ret);
                    m.add_edge(m.nodes_[c->id].ret, meta.ret);
                }
            const bt_node* parent = tree.parent(*n);
            if (!parent) continue;
            auto& pmeta = m.nodes_[parent->id];
            if (tree.is_leftmost(*n)) {
                meta.parent_exec = pmeta.exec;
                m.add_edge(pmeta.exec, meta.exec);
                m.cls_[static_cast<size_t>(meta.exec)] = eval_class::exec_leftmost;
            } else {
                const bt_node* sib = tree.left_sibling(*n);
                meta.sibling_ret = m.nodes_[sib->id].ret;
                meta.parent_kind = parent->kind;
                m.add_edge(meta.sibling_ret, meta.exec);
                m.cls_[static_cast<size_t>(meta.exec)] = eval_class::exec_sibling;
            }
        }
    }

    void add_leaf_inputs(const bt_node& leaf, int pos) {
        auto& meta = m.nodes_[leaf.id];
        for (const auto& x : leaf.inputs) {
            int xv = ensure_state(x, tau[x], pos);
            meta.read_versions[x] = xv;
            auto anc = sm.ancestors(x);
            std::set<std::string> relevant(anc.begin(), anc.end());
            relevant.insert(x);
            for (const auto& a : anc) ensure_state(a, tau[a], pos);
            // state-graph rule: wire the current versions of x and its
            // ancestors the way the state model wires the variables
            for (const auto& [p, c] : sm.edges) {
                if (!relevant.count(c)) continue;
                m.add_edge(mat.at({p, tau[p]}), mat.at({c, tau[c]}));
            }
            m.add_edge(xv, meta.ret); // input rule
            if (leaf.kind == node_kind::action) m.add_edge(xv, meta.dec);
        }
        std::set<std::string> bump(leaf.inputs.begin(), leaf.inputs.end());
        for (const auto& x : leaf.inputs)
            for (const auto& a : sm.ancestors(x)) bump.insert(a);
        for (const auto& v : sm.variables)
            if (bump.count(v.name)) tau[v.name] += 1;
    }

    void add_leaf_outputs(const bt_node& leaf, int pos) {
        auto& meta = m.nodes_[leaf.id];
        for (const auto& y : leaf.outputs) {
            // a version may be written at most once; successive writers with
            // no read in between get fresh versions
            auto existing = mat.find({y, tau[y]});
            if (existing != mat.end() &&
                !m.state_meta_[static_cast<size_t>(existing->second)].writer.empty())
                tau[y] += 1;
            int yv = ensure_state(y, tau[y], pos);
            m.state_meta_[static_cast<size_t>(yv)].writer = leaf.id;
            m.add_edge(meta.exec, yv);  // output rule
            m.add_edge(meta.dec, yv);
        }
    }

    void add_temporal_edges() {
        for (const auto& v : sm.variables) {
            if (!sm.is_top_level(v.name)) continue;
            std::vector<int> versions;
            for (const auto& [key, idx] : mat)
                if (key.first == v.name) versions.push_back(key.second);
            std::sort(versions.begin(), versions.end());
            // temporal rule: consecutive materialized versions only; counter
            // values that never produced a variable are skipped
            for (size_t i = 1; i < versions.size(); ++i)
                m.add_edge(mat.at({v.name, versions[i - 1]}), mat.at({v.name, versions[i]}));
        }
    }

    void classify() {
        for (const auto& [key, idx] : mat) {
            const auto& [name, version] = key;
            auto& sm_meta = m.state_meta_[static_cast<size_t>(idx)];
            std::vector<int> versions;
            for (const auto& [k2, i2] : mat)
                if (k2.first == name && k2.second < version) versions.push_back(k2.second);
            if (!versions.empty())
                sm_meta.prev = mat.at({name, *std::max_element(versions.begin(), versions.end())});

            auto& c = m.cls_[static_cast<size_t>(idx)];
            if (!sm_meta.writer.empty()) {
                c = eval_class::state_internal;
                continue;
            }
            if (sm.is_top_level(name)) {
                c = version == 0 ? eval_class::state_initial : eval_class::state_carry;
                continue;
            }
            // derived: find the versioned parents wired by the state rule
            for (int p : m.parents_[static_cast<size_t>(idx)]) {
                const auto& pv = m.vars_[static_cast<size_t>(p)];
                if (pv.f == expl_var::facet::state) sm_meta.fn_parents[pv.id] = p;
            }
            if (sm_meta.fn_parents.empty()) {
                c = eval_class::state_isolated;
                continue;
            }
            auto expected = sm.parents(name);
            if (sm_meta.fn_parents.size() != expected.size())
                fail(errc::validation, "version " + m.vars_[static_cast<size_t>(idx)].to_string() +
                                           " is missing structural parents");
            c = eval_class::state_derived;
        }
    }

    expl_model build() {
        graph_from_structure();
        for (const auto& v : sm.variables) {
            tau[v.name] = 0;
            ensure_state(v.name, 0, -1);
        }
        int pos = 0;
        for (const bt_node* leaf : tree.leaves()) {
            add_leaf_inputs(*leaf, pos);
            if (leaf->kind == node_kind::action) add_leaf_outputs(*leaf, pos);
            ++pos;
        }
        add_temporal_edges();
        m.finalize();
        classify();
        m.tau_ = tau;
        return std::move(m);
    }
};

expl_model expl_model::build(std::shared_ptr<const bt_tree> tree,
                             std::shared_ptr<const state_model> sm) {
    tree->validate(*sm);
    expl_model_builder b(std::move(tree), std::move(sm));
    return b.build();
}

std::vector<int> expl_model::versions_of(const std::string& name) const {
    std::vector<int> out;
    for (const auto& v : vars_)
        if (v.f == expl_var::facet::state && v.id == name) out.push_back(v.version);
    std::sort(out.begin(), out.end());
    if (out.empty()) fail(errc::unknown_variable, "no versions of state variable '" + name + "'");
    return out;
}

int expl_model::last_version_of(const std::string& name) const { return versions_of(name).back(); }

namespace {

assignment project_parents(const expl_model& m, int i, const std::function<value(int)>& lookup) {
    assignment s;
    for (int p : m.parents(i)) {
        const auto& pv = m.var(p);
        if (pv.f == expl_var::facet::state) s[pv.id] = lookup(p);
    }
    return s;
}

} // namespace

value expl_model::eval(int i, const std::function<value(int)>& lookup, const eval_ctx& ctx) const {
    const auto& v = vars_[static_cast<size_t>(i)];
    auto node_meta_of = [&](const std::string& id) -> const node_meta& { return nodes_.at(id); };

    switch (cls(i)) {
        case eval_class::exec_root: return value(true);
        case eval_class::exec_leftmost: return lookup(node_meta_of(v.id).parent_exec);
        case eval_class::exec_sibling: {
            const auto& meta = node_meta_of(v.id);
            status sib = lookup(meta.sibling_ret).as_status();
            if (meta.parent_kind == node_kind::sequence) return value(sib == status::success);
            return value(sib == status::failure);
        }
        case eval_class::ret_leaf: {
            const auto& meta = node_meta_of(v.id);
            if (!lookup(meta.exec).as_bool()) return value(status::invalid);
            assignment s = project_parents(*this, i, lookup);
            if (meta.node->kind == node_kind::condition)
                return value(meta.node->behaviour.ret("", s));
            return value(meta.node->behaviour.ret(lookup(meta.dec).as_symbol(), s));
        }
        case eval_class::ret_composite: {
            const auto& meta = node_meta_of(v.id);
            if (!lookup(meta.exec).as_bool()) return value(status::invalid);
            const bool seq = meta.node->kind == node_kind::sequence;
            for (int cr : meta.child_rets) {
                status cs = lookup(cr).as_status();
                if (seq && cs != status::success) return value(cs);
                if (!seq && cs != status::failure) return value(cs);
            }
            return value(seq ? status::success : status::failure);
        }
        case eval_class::decision: {
            const auto& meta = node_meta_of(v.id);
            if (!lookup(meta.exec).as_bool()) return value(noop_action);
            assignment s = project_parents(*this, i, lookup);
            return value(meta.node->behaviour.decide(s));
        }
        case eval_class::state_initial:
        case eval_class::state_isolated: {
            if (!ctx.tick_initial) fail(errc::missing_parent_value, "no tick-initial state bound");
            auto it = ctx.tick_initial->find(v.id);
            if (it == ctx.tick_initial->end())
                fail(errc::missing_parent_value, "tick-initial state lacks '" + v.id + "'");
            return it->second;
        }
        case eval_class::state_carry:
            return lookup(state_meta_[static_cast<size_t>(i)].prev);
        case eval_class::state_derived: {
            assignment s;
            for (const auto& [name, idx] : state_meta_[static_cast<size_t>(i)].fn_parents)
                s[name] = lookup(idx);
            return sm_->eval_derived(v.id, s);
        }
        case eval_class::state_internal: {
            const auto& smeta = state_meta_[static_cast<size_t>(i)];
            const auto& wmeta = nodes_.at(smeta.writer);
            if (!lookup(wmeta.exec).as_bool()) {
                if (smeta.prev >= 0) return lookup(smeta.prev);
                if (!ctx.tick_initial) fail(errc::missing_parent_value, "no tick-initial state bound");
                return ctx.tick_initial->at(v.id);
            }
            assignment z;
            for (const auto& [name, idx] : wmeta.read_versions) z[name] = lookup(idx);
            assignment writes = wmeta.node->behaviour.effect(z);
            auto it = writes.find(v.id);
            if (it == writes.end())
                fail(errc::missing_parent_value,
                     "effect of '" + smeta.writer + "' did not produce '" + v.id + "'");
            if (!ranges_[static_cast<size_t>(i)].contains(it->second))
                fail(errc::range_violation, "effect of '" + smeta.writer +
                                                "' produced out-of-range " + it->second.to_string());
            return it->second;
        }
    }
    fail(errc::validation, "unreachable evaluator class");
}

std::vector<int> expl_model::ancestors_of(const std::vector<int>& targets) const {
    std::set<int> seen(targets.begin(), targets.end());
    std::vector<int> frontier(targets.begin(), targets.end());
    std::set<int> out;
    while (!frontier.empty()) {
        int cur = frontier.back();
        frontier.pop_back();
        for (int p : parents(cur)) {
            if (seen.insert(p).second) {
                out.insert(p);
                frontier.push_back(p);
            }
        }
    }
    for (int t : targets) out.erase(t);
    std::vector<int> sorted(out.begin(), out.end());
    std::sort(sorted.begin(), sorted.end(),
              [&](int a, int b) { return topo_rank(a) < topo_rank(b); });
    return sorted;
}

std::set<int> expl_model::descendants_of(const std::vector<int>& sources) const {
    std::set<int> seen;
    std::vector<int> frontier(sources.begin(), sources.end());
    while (!frontier.empty()) {
        int cur = frontier.back();
        frontier.pop_back();
        for (int c : children(cur))
            if (seen.insert(c).second) frontier.push_back(c);
    }
    for (int s : sources) seen.erase(s);
    return seen;
}

std::map<int, value> evaluate_full(const expl_model& m, const assignment& tick_initial) {
    std::map<int, value> out;
    eval_ctx ctx{&tick_initial};
    auto lookup = [&](int i) -> value {
        auto it = out.find(i);
        if (it == out.end())
            fail(errc::missing_parent_value, "variable evaluated before its parents");
        return it->second;
    };
    for (int i : m.topo_order()) out[i] = m.eval(i, lookup, ctx);
    return out;
}

namespace {

const char* class_name(eval_class c) {
    switch (c) {
        case eval_class::exec_root: return "exec_root";
        case eval_class::exec_leftmost: return "exec_leftmost";
        case eval_class::exec_sibling: return "exec_sibling";
        case eval_class::ret_leaf: return "ret_leaf";
        case eval_class::ret_composite: return "ret_composite";
        case eval_class::decision: return "decision";
        case eval_class::state_initial: return "state_initial";
        case eval_class::state_carry: return "state_carry";
        case eval_class::state_derived: return "state_derived";
        case eval_class::state_internal: return "state_internal";
        case eval_class::state_isolated: return "state_isolated";
    }
    return "?";
}

} // namespace

nlohmann::json expl_model::graph_json() const {
    nlohmann::json out;
    auto& nodes = out["nodes"] = nlohmann::json::array();
    for (int i = 0; i < size(); ++i) {
        nodes.push_back({{"var", var(i).to_string()},
                         {"class", class_name(cls(i))},
                         {"range", range(i).to_json()}});
    }
    auto& es = out["edges"] = nlohmann::json::array();
    std::vector<std::pair<int, int>> sorted = edges_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [a, b] : sorted)
        es.push_back({var(a).to_string(), var(b).to_string()});
    auto& taus = out["tau"] = nlohmann::json::object();
    for (const auto& [name, t] : tau_) taus[name] = t;
    return out;
}

std::string expl_model::to_dot() const {
    std::ostringstream os;
    os << "digraph explanation_model {\n  rankdir=TB;\n";
    for (int i = 0; i < size(); ++i) {
        const auto& v = var(i);
        const char* shape = "ellipse";
        if (v.f == expl_var::facet::exec) shape = "diamond";
        if (v.f == expl_var::facet::decision) shape = "box";
        if (v.f == expl_var::facet::state) shape = "oval";
        os << "  \"" << v.to_string() << "\" [shape=" << shape << "];\n";
    }
    std::vector<std::pair<int, int>> sorted = edges_;
    std::sort(sorted.begin(), sorted.end());
    for (const auto& [a, b] : sorted)
        os << "  \"" << var(a).to_string() << "\" -> \"" << var(b).to_string() << "\";\n";
    os << "}\n";
    return os.str();
}

} // namespace btx
