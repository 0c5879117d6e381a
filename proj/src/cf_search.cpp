#include "btx/cf_search.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace btx {

reconstruction reconstruct(const expl_model& m, const episodic_memory& mem, std::int64_t k) {
    if (k < 0 || k > mem.last_index())
        fail(errc::out_of_range, "time " + std::to_string(k) + " outside the recorded run");

    reconstruction rec;
    rec.k = k;
    auto [start, tick] = mem.tick_span_start(k);
    rec.tick = tick;
    rec.tick_initial = mem.slice_until(start - 1).state;

    // Replay the anchoring tick up to k.
    std::map<std::string, status> returned;
    std::map<std::string, std::string> returned_action;
    std::int64_t last_result = start - 1;
    for (std::int64_t i = start; i <= k; ++i) {
        const event& e = mem.at(i);
        if (e.k == event::kind::node_result) {
            returned[e.node_id] = e.st;
            if (!e.action.empty()) returned_action[e.node_id] = e.action;
            last_result = i;
        }
    }

    // A node has started if it returned, if it is an ancestor of a returned
    // node, or if its state changes are already in the log (a leaf whose
    // result lies just past k). The root counts as started throughout.
    std::set<std::string> started;
    started.insert(m.tree().root().id);
    auto mark_with_ancestors = [&](const std::string& id) {
        const bt_node* n = &m.tree().node(id);
        while (n) {
            started.insert(n->id);
            n = m.tree().parent(*n);
        }
    };
    for (const auto& [id, st] : returned) mark_with_ancestors(id);
    bool pending_writes = false;
    for (std::int64_t i = last_result + 1; i <= k; ++i)
        if (mem.at(i).k == event::kind::state_change) pending_writes = true;
    if (pending_writes) {
        for (std::int64_t i = k + 1; i <= mem.last_index(); ++i) {
            const event& e = mem.at(i);
            if (e.k == event::kind::node_result) {
                mark_with_ancestors(e.node_id);
                break;
            }
        }
    }

    eval_ctx ctx{&rec.tick_initial};
    auto lookup = [&](int i) -> value {
        auto it = rec.values.find(i);
        if (it == rec.values.end())
            fail(errc::missing_parent_value, "reconstruction visited a variable out of order");
        return it->second;
    };
    for (int i : m.topo_order()) {
        const expl_var& v = m.var(i);
        switch (v.f) {
            case expl_var::facet::exec:
                rec.values[i] = value(started.count(v.id) > 0);
                break;
            case expl_var::facet::ret: {
                auto it = returned.find(v.id);
                rec.values[i] = value(it == returned.end() ? status::invalid : it->second);
                break;
            }
            case expl_var::facet::decision: {
                auto it = returned_action.find(v.id);
                rec.values[i] = value(it == returned_action.end() ? noop_action : it->second);
                break;
            }
            case expl_var::facet::state:
                rec.values[i] = m.eval(i, lookup, ctx);
                break;
        }
    }
    return rec;
}

std::map<int, value> do_intervene(const expl_model& m, const std::map<int, value>& base,
                                  const std::vector<std::pair<int, value>>& interventions,
                                  const assignment& tick_initial) {
    std::map<int, value> out = base;
    std::vector<int> sources;
    for (const auto& [idx, v] : interventions) {
        if (!m.range(idx).contains(v))
            fail(errc::range_violation, "intervention value " + v.to_string() +
                                            " outside range of " + m.var(idx).to_string());
        out[idx] = v;
        sources.push_back(idx);
    }
    std::set<int> affected = m.descendants_of(sources);
    for (const auto& [idx, v] : interventions) affected.erase(idx);

    eval_ctx ctx{&tick_initial};
    auto lookup = [&](int i) -> value {
        auto it = out.find(i);
        if (it == out.end()) fail(errc::missing_parent_value, "unassigned model variable");
        return it->second;
    };
    for (int i : m.topo_order()) {
        if (!affected.count(i)) continue;
        if (!m.reevaluable(i)) continue;
        out[i] = m.eval(i, lookup, ctx);
    }
    return out;
}

bool foil_spec::matches(const value& v) const {
    for (const auto& fv : values)
        if (fv == v) return true;
    if (v.is_number())
        for (const auto& [lo, hi] : intervals)
            if (v.as_number() >= lo && v.as_number() <= hi) return true;
    return false;
}

std::vector<value> discretize(const var_range& range, int bins, const value& actual) {
    if (range.kind != range_kind::continuous)
        fail(errc::validation, "discretize applies to continuous ranges only");
    return range.candidates(actual, bins);
}

namespace {

void validate_query(const expl_model& m, const query& q, const reconstruction& rec) {
    if (q.targets.empty()) fail(errc::invalid_query, "query names no variables");
    if (q.targets.size() != q.facts.size() || q.targets.size() != q.foils.size())
        fail(errc::invalid_query, "query facts/foils do not line up with its variables");
    for (size_t i = 0; i < q.targets.size(); ++i) {
        int idx = m.index_of(q.targets[i]);
        if (!m.range(idx).contains(q.facts[i]))
            fail(errc::invalid_query, "fact " + q.facts[i].to_string() + " outside range of " +
                                          q.targets[i].to_string());
        if (q.foils[i].empty())
            fail(errc::invalid_query, "empty foil for " + q.targets[i].to_string());
        if (q.foils[i].matches(q.facts[i]))
            fail(errc::invalid_query, "foil of " + q.targets[i].to_string() +
                                          " must exclude the fact value");
        for (const auto& fv : q.foils[i].values)
            if (!m.range(idx).contains(fv))
                fail(errc::invalid_query, "foil value " + fv.to_string() + " outside range of " +
                                              q.targets[i].to_string());
        const value& actual = rec.values.at(idx);
        if (actual != q.facts[i])
            fail(errc::invalid_query, "fact " + q.targets[i].to_string() + "=" +
                                          q.facts[i].to_string() + " does not match the record (" +
                                          actual.to_string() + " at time " + std::to_string(rec.k) +
                                          ")");
    }
}

} // namespace

search_result counterfactual_search(const expl_model& m, const episodic_memory& mem,
                                    const query& q, int d_max, int bins) {
    if (d_max < 1) fail(errc::invalid_query, "search depth must be at least 1");
    search_result res;
    res.q = q;
    res.recon = reconstruct(m, mem, q.time);
    validate_query(m, q, res.recon);
    res.node_time = mem.node_time_of(q.time);
    res.leaf_time = 0;
    for (std::int64_t i = 1; i <= q.time; ++i) {
        const event& e = mem.at(i);
        if (e.k == event::kind::node_result && m.tree().node(e.node_id).is_leaf())
            ++res.leaf_time;
    }

    std::vector<int> target_idx;
    for (const auto& t : q.targets) target_idx.push_back(m.index_of(t));

    // restrict the search to the ancestors of the queried variables
    std::vector<int> searchable = m.ancestors_of(target_idx);
    res.searchable_variables = static_cast<int>(searchable.size());
    if (searchable.empty())
        fail(errc::no_explanation_found, "queried variables have no ancestors to intervene on");

    std::vector<std::vector<value>> cand;
    for (int idx : searchable)
        cand.push_back(m.range(idx).candidates(res.recon.values.at(idx), bins));

    const int n = static_cast<int>(searchable.size());
    for (int depth = 1; depth <= d_max; ++depth) {
        if (depth > n) break;
        std::vector<int> pick(static_cast<size_t>(depth));
        // lexicographic subsets over the topologically sorted variable list
        std::function<void(int, int)> subsets = [&](int start, int chosen) {
            if (chosen == depth) {
                std::vector<size_t> odo(static_cast<size_t>(depth), 0);
                for (int i = 0; i < depth; ++i)
                    if (cand[static_cast<size_t>(pick[static_cast<size_t>(i)])].empty()) return;
                while (true) {
                    std::vector<std::pair<int, value>> interventions;
                    for (int i = 0; i < depth; ++i) {
                        int ci = pick[static_cast<size_t>(i)];
                        interventions.emplace_back(searchable[static_cast<size_t>(ci)],
                                                   cand[static_cast<size_t>(ci)][odo[static_cast<size_t>(i)]]);
                    }
                    ++res.candidates_tested;
                    auto after = do_intervene(m, res.recon.values, interventions,
                                              res.recon.tick_initial);
                    bool hit = true;
                    for (size_t t = 0; t < target_idx.size(); ++t)
                        if (!q.foils[t].matches(after.at(target_idx[t]))) {
                            hit = false;
                            break;
                        }
                    if (hit) {
                        explanation e;
                        for (const auto& [idx, v] : interventions)
                            e.changes.push_back({idx, res.recon.values.at(idx), v});
                        for (int t : target_idx) e.outcome.emplace_back(t, after.at(t));
                        res.explanations.push_back(std::move(e));
                    }
                    int pos = depth - 1;
                    while (pos >= 0) {
                        int ci = pick[static_cast<size_t>(pos)];
                        if (++odo[static_cast<size_t>(pos)] <
                            cand[static_cast<size_t>(ci)].size())
                            break;
                        odo[static_cast<size_t>(pos)] = 0;
                        --pos;
                    }
                    if (pos < 0) break;
                }
                return;
            }
            for (int i = start; i <= n - (depth - chosen); ++i) {
                pick[static_cast<size_t>(chosen)] = i;
                subsets(i + 1, chosen + 1);
            }
        };
        subsets(0, 0);
        if (!res.explanations.empty()) {
            res.depth = depth;
            return res;
        }
    }
    fail(errc::no_explanation_found,
         "no intervention of depth <= " + std::to_string(d_max) + " satisfies the query");
}

query make_follow_up(const expl_model& m, const episodic_memory& mem, const search_result& res,
                     int explanation_index, int reason_index) {
    if (explanation_index < 0 ||
        explanation_index >= static_cast<int>(res.explanations.size()))
        fail(errc::invalid_query, "no explanation #" + std::to_string(explanation_index + 1));
    const explanation& e = res.explanations[static_cast<size_t>(explanation_index)];
    if (reason_index < 0 || reason_index >= static_cast<int>(e.changes.size()))
        fail(errc::invalid_query, "no reason #" + std::to_string(reason_index + 1));
    const auto& reason = e.changes[static_cast<size_t>(reason_index)];
    const expl_var& v = m.var(reason.var);

    query fq;
    if (m.cls(reason.var) == eval_class::state_initial) {
        // the tick-initial value equals the last version at the end of the
        // previous tick; re-anchor the question there
        if (res.recon.tick <= 1)
            fail(errc::no_previous_tick,
                 "cannot follow '" + v.to_string() + "' past the first tick");
        int last = m.last_version_of(v.id);
        fq.targets.push_back(expl_var::state(v.id, last));
        fq.time = mem.tick_end_index(res.recon.tick - 1);
    } else {
        if (m.parents(reason.var).empty())
            fail(errc::invalid_query,
                 "'" + v.to_string() + "' has no causes in the model to search");
        fq.targets.push_back(v);
        fq.time = res.recon.k;
    }
    fq.facts.push_back(reason.actual);
    foil_spec f;
    f.values.push_back(reason.counterfactual);
    fq.foils.push_back(f);
    return fq;
}

namespace {

expl_var parse_selector(const std::string& s, const expl_model& m, const episodic_memory& mem,
                        std::int64_t time) {
    auto dot = s.find('.');
    if (dot == std::string::npos) {
        // bare state name: the version current as of the queried time
        int version = 0;
        auto versions = m.versions_of(s);
        auto [start, tick] = mem.tick_span_start(time);
        int resolved = -1; // leaf positions resolved by `time` within the tick
        for (std::int64_t i = start; i <= time && i <= mem.last_index(); ++i) {
            const event& e = mem.at(i);
            if (e.k != event::kind::node_result) continue;
            const auto& leaves = m.tree().leaves();
            for (int li = 0; li < static_cast<int>(leaves.size()); ++li) {
                // a leaf is resolved once it or anything after it returned
                if (leaves[static_cast<size_t>(li)]->id == e.node_id && li > resolved)
                    resolved = li;
            }
            if (m.tree().node(e.node_id).is_composite()) {
                // a composite's return resolves all leaves under it
                std::function<void(const bt_node&)> mark = [&](const bt_node& nn) {
                    const auto& leaves2 = m.tree().leaves();
                    for (int li = 0; li < static_cast<int>(leaves2.size()); ++li)
                        if (leaves2[static_cast<size_t>(li)] == &nn && li > resolved) resolved = li;
                    for (const auto& c : nn.children) mark(*c);
                };
                mark(m.tree().node(e.node_id));
            }
        }
        for (int ver : versions) {
            int idx = m.index_of(expl_var::state(s, ver));
            if (m.binding_position(idx) <= resolved) version = ver;
        }
        return expl_var::state(s, version);
    }
    const std::string head = s.substr(0, dot);
    const std::string tail = s.substr(dot + 1);
    if (head == "E") return expl_var::exec(tail);
    if (head == "r") return expl_var::ret(tail);
    if (head == "d") return expl_var::decision(tail);
    try {
        return expl_var::state(head, std::stoi(tail));
    } catch (const std::exception&) {
        fail(errc::invalid_query, "bad variable selector '" + s + "'");
    }
}

foil_spec foil_from_json(const nlohmann::json& j) {
    foil_spec f;
    auto add = [&](const nlohmann::json& e) {
        if (e.is_object() && e.contains("lo"))
            f.intervals.emplace_back(e.at("lo").get<double>(), e.at("hi").get<double>());
        else
            f.values.push_back(json_to_value(e));
    };
    if (j.is_array())
        for (const auto& e : j) add(e);
    else
        add(j);
    return f;
}

nlohmann::json foil_to_json(const foil_spec& f) {
    auto arr = nlohmann::json::array();
    for (const auto& v : f.values) arr.push_back(value_to_json(v));
    for (const auto& [lo, hi] : f.intervals) arr.push_back({{"lo", lo}, {"hi", hi}});
    return arr;
}

} // namespace

query query::from_json(const nlohmann::json& j, const expl_model& m, const episodic_memory& mem) {
    query q;
    std::int64_t t = j.at("time").get<std::int64_t>();
    const std::string kind = j.value("time_kind", "event");
    if (kind == "event")
        q.time = t;
    else if (kind == "node")
        q.time = mem.index_of_node_time(t);
    else if (kind == "leaf") {
        std::vector<std::string> leaf_ids;
        for (const bt_node* l : m.tree().leaves()) leaf_ids.push_back(l->id);
        q.time = mem.index_of_leaf_time(t, leaf_ids);
    } else
        fail(errc::invalid_query, "time_kind must be event, node or leaf");
    if (q.time < 0 || q.time > mem.last_index())
        fail(errc::out_of_range, "query time outside the recorded run");

    auto targets = j.at("targets");
    auto facts = j.at("facts");
    auto foils = j.at("foils");
    if (!targets.is_array() || !facts.is_array() || !foils.is_array())
        fail(errc::invalid_query, "targets, facts and foils must be arrays");
    for (size_t i = 0; i < targets.size(); ++i) {
        q.targets.push_back(parse_selector(targets[i].get<std::string>(), m, mem, q.time));
        q.facts.push_back(json_to_value(facts.at(i)));
        q.foils.push_back(foil_from_json(foils.at(i)));
    }
    return q;
}

nlohmann::json query::to_json(const expl_model&) const {
    nlohmann::json out;
    auto& ts = out["targets"] = nlohmann::json::array();
    for (const auto& t : targets) ts.push_back(t.to_string());
    auto& fs = out["facts"] = nlohmann::json::array();
    for (const auto& f : facts) fs.push_back(value_to_json(f));
    auto& fo = out["foils"] = nlohmann::json::array();
    for (const auto& f : foils) fo.push_back(foil_to_json(f));
    out["time"] = time;
    return out;
}

nlohmann::json result_to_json(const expl_model& m, const search_result& res) {
    nlohmann::json out;
    out["query"] = res.q.to_json(m);
    out["tick"] = res.recon.tick;
    out["node_time"] = res.node_time;
    out["leaf_time"] = res.leaf_time;
    out["depth"] = res.depth;
    out["candidates_tested"] = res.candidates_tested;
    out["searchable_variables"] = res.searchable_variables;
    auto& es = out["explanations"] = nlohmann::json::array();
    for (const auto& e : res.explanations) {
        nlohmann::json ej;
        auto& reasons = ej["reasons"] = nlohmann::json::array();
        auto& cf = ej["counterfactual"] = nlohmann::json::object();
        auto& jj = cf["if"] = nlohmann::json::array();
        for (const auto& c : e.changes) {
            reasons.push_back(
                {{"var", m.var(c.var).to_string()}, {"value", value_to_json(c.actual)}});
            jj.push_back(
                {{"var", m.var(c.var).to_string()}, {"value", value_to_json(c.counterfactual)}});
        }
        auto& kk = cf["then"] = nlohmann::json::array();
        for (const auto& [idx, v] : e.outcome)
            kk.push_back({{"var", m.var(idx).to_string()}, {"value", value_to_json(v)}});
        es.push_back(std::move(ej));
    }
    return out;
}

} // namespace btx
