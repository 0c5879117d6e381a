// Test-only reference implementations, kept independent of the production
// construction and search paths they check.
#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "btx/cf_search.hpp"
#include "btx/domains.hpp"
#include "btx/explain_graph.hpp"

namespace btx::oracle {

struct tagged_edge {
    std::string from, to, rule;
    bool operator<(const tagged_edge& o) const {
        return std::tie(from, to, rule) < std::tie(o.from, o.to, o.rule);
    }
};

// Re-derives the full edge set of the explanation graph directly from the
// construction rules, tagging every edge with the rule that produced it.
inline std::vector<tagged_edge> derive_edges(const bt_tree& tree, const state_model& sm) {
    std::set<tagged_edge> out;
    auto E = [](const std::string& id) { return "E." + id; };
    auto R = [](const std::string& id) { return "r." + id; };
    auto D = [](const std::string& id) { return "d." + id; };
    auto S = [](const std::string& name, int v) { return name + "." + std::to_string(v); };

    // structure rules
    for (const bt_node* n : tree.preorder()) {
        out.insert({E(n->id), R(n->id), "exec_to_ret"});
        if (n->kind == node_kind::action) {
            out.insert({E(n->id), D(n->id), "leaf_decision"});
            out.insert({D(n->id), R(n->id), "leaf_decision"});
        }
        if (n->is_composite())
            for (const auto& c : n->children) out.insert({R(c->id), R(n->id), "child_return"});
        const bt_node* p = tree.parent(*n);
        if (!p) continue;
        if (tree.is_leftmost(*n))
            out.insert({E(p->id), E(n->id), "leftmost_exec"});
        else
            out.insert({R(tree.left_sibling(*n)->id), E(n->id), "sibling_exec"});
    }

    // domain knowledge
    std::map<std::string, int> tau;
    std::set<std::pair<std::string, int>> mat;
    std::map<std::pair<std::string, int>, bool> written;
    for (const auto& v : sm.variables) {
        tau[v.name] = 0;
        mat.insert({v.name, 0});
    }
    for (const bt_node* leaf : tree.leaves()) {
        for (const auto& x : leaf->inputs) {
            mat.insert({x, tau[x]});
            auto anc = sm.ancestors(x);
            std::set<std::string> relevant(anc.begin(), anc.end());
            relevant.insert(x);
            for (const auto& a : anc) mat.insert({a, tau[a]});
            for (const auto& [p, c] : sm.edges)
                if (relevant.count(c))
                    out.insert({S(p, tau[p]), S(c, tau[c]), "state_graph"});
            out.insert({S(x, tau[x]), R(leaf->id), "leaf_input"});
            if (leaf->kind == node_kind::action)
                out.insert({S(x, tau[x]), D(leaf->id), "leaf_input"});
        }
        std::set<std::string> bump(leaf->inputs.begin(), leaf->inputs.end());
        for (const auto& x : leaf->inputs)
            for (const auto& a : sm.ancestors(x)) bump.insert(a);
        for (const auto& b : bump) tau[b] += 1;
        if (leaf->kind == node_kind::action) {
            for (const auto& y : leaf->outputs) {
                if (written.count({y, tau[y]}) && written[{y, tau[y]}]) tau[y] += 1;
                mat.insert({y, tau[y]});
                written[{y, tau[y]}] = true;
                out.insert({E(leaf->id), S(y, tau[y]), "leaf_output"});
                out.insert({D(leaf->id), S(y, tau[y]), "leaf_output"});
            }
        }
    }
    for (const auto& v : sm.variables) {
        if (!sm.is_top_level(v.name)) continue;
        std::vector<int> versions;
        for (const auto& [name, ver] : mat)
            if (name == v.name) versions.push_back(ver);
        std::sort(versions.begin(), versions.end());
        for (size_t i = 1; i < versions.size(); ++i)
            out.insert({S(v.name, versions[i - 1]), S(v.name, versions[i]), "temporal"});
    }
    return {out.begin(), out.end()};
}

// Poor-man's recursive evaluator for boolean state models; used against
// propagate() on exhaustively enumerated top-level assignments.
inline value recursive_eval(const state_model& sm, const std::string& name,
                            const assignment& top_level) {
    if (sm.is_top_level(name)) return top_level.at(name);
    assignment parents;
    for (const auto& p : sm.parents(name)) parents[p] = recursive_eval(sm, p, top_level);
    return sm.eval_derived(name, parents);
}

// Every satisfying intervention of exactly `depth` variables, enumerated in
// an order unrelated to the search's (variables sorted by name, recursive
// descent). Pool defaults to the ancestors of the queried variables; pass
// all_variables=true to sweep the whole model instead.
inline std::set<std::map<std::string, std::string>>
brute_force_hits(const expl_model& m, const episodic_memory& mem, const query& q, int depth,
                 int bins, bool all_variables = false) {
    reconstruction rec = reconstruct(m, mem, q.time);
    std::vector<int> targets;
    for (const auto& t : q.targets) targets.push_back(m.index_of(t));

    std::vector<int> pool;
    if (all_variables) {
        for (int i = 0; i < m.size(); ++i)
            if (std::find(targets.begin(), targets.end(), i) == targets.end()) pool.push_back(i);
    } else {
        pool = m.ancestors_of(targets);
    }
    std::sort(pool.begin(), pool.end(),
              [&](int a, int b) { return m.var(a).to_string() < m.var(b).to_string(); });

    std::set<std::map<std::string, std::string>> hits;
    std::vector<std::pair<int, value>> chosen;
    std::function<void(size_t)> descend = [&](size_t start) {
        if (static_cast<int>(chosen.size()) == depth) {
            auto after = do_intervene(m, rec.values, chosen, rec.tick_initial);
            for (size_t t = 0; t < targets.size(); ++t)
                if (!q.foils[t].matches(after.at(targets[static_cast<size_t>(t)]))) return;
            std::map<std::string, std::string> hit;
            for (const auto& [idx, v] : chosen) hit[m.var(idx).to_string()] = v.to_string();
            hits.insert(std::move(hit));
            return;
        }
        for (size_t i = start; i < pool.size(); ++i) {
            int idx = pool[i];
            for (const auto& v : m.range(idx).candidates(rec.values.at(idx), bins)) {
                chosen.emplace_back(idx, v);
                descend(i + 1);
                chosen.pop_back();
            }
        }
    };
    descend(0);
    return hits;
}

inline std::set<std::map<std::string, std::string>> explanation_set(const expl_model& m,
                                                                    const search_result& res) {
    std::set<std::map<std::string, std::string>> out;
    for (const auto& e : res.explanations) {
        std::map<std::string, std::string> j;
        for (const auto& c : e.changes) j[m.var(c.var).to_string()] = c.counterfactual.to_string();
        out.insert(std::move(j));
    }
    return out;
}

} // namespace btx::oracle
