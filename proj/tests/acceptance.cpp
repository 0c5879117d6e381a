// Acceptance suite: runs every top-level requirement at its stated tolerance
// and prints one PASS/FAIL line each. Exits non-zero if any line fails.
#include <chrono>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "btx/cf_search.hpp"
#include "btx/domains.hpp"
#include "btx/executor.hpp"
#include "oracles.hpp"

using namespace btx;
using clock_type = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " — " << detail;
    std::cout << "\n";
    if (!ok) ++g_failures;
}

struct expected_explanation {
    std::map<std::string, std::string> reasons; // var -> actual
    std::map<std::string, std::string> flips;   // var -> counterfactual
    std::map<std::string, std::string> outcome; // target -> foil value
};

bool matches(const expl_model& m, const search_result& res,
             std::vector<expected_explanation> expected) {
    if (res.explanations.size() != expected.size()) return false;
    for (const auto& e : res.explanations) {
        expected_explanation got;
        for (const auto& c : e.changes) {
            got.reasons[m.var(c.var).to_string()] = c.actual.to_string();
            got.flips[m.var(c.var).to_string()] = c.counterfactual.to_string();
        }
        for (const auto& [idx, v] : e.outcome) got.outcome[m.var(idx).to_string()] = v.to_string();
        bool found = false;
        for (auto it = expected.begin(); it != expected.end(); ++it) {
            if (it->reasons == got.reasons && it->flips == got.flips &&
                it->outcome == got.outcome) {
                expected.erase(it);
                found = true;
                break;
            }
        }
        if (!found) return false;
    }
    return expected.empty();
}

query simple_query(const expl_var& target, value fact, std::vector<value> foil,
                   std::int64_t time) {
    query q;
    q.targets.push_back(target);
    q.facts.push_back(std::move(fact));
    foil_spec f;
    f.values = std::move(foil);
    q.foils.push_back(f);
    q.time = time;
    return q;
}

// ---- criterion 1: the worked example's explanation sets, exactly ---------

void criterion_explanation_sets() {
    auto started = clock_type::now();
    domain d = case_study_domain();
    expl_model m = expl_model::build(d.tree, d.model);
    episodic_memory mem;
    run(d, {{"Xa", value(false)}, {"Xb", value(false)}}, 1, mem);

    bool ok = true;
    std::string detail;

    // why did L0 execute (2 explanations: the executing ancestors)
    {
        auto res = counterfactual_search(
            m, mem, simple_query(expl_var::exec("L0"), value(true), {value(false)},
                                 mem.index_of_node_time(1)),
            3, 10);
        ok &= matches(m, res,
                      {{{{"E.seq", "true"}}, {{"E.seq", "false"}}, {{"E.L0", "false"}}},
                       {{{"E.sel", "true"}}, {{"E.sel", "false"}}, {{"E.L0", "false"}}}});
        if (!ok && detail.empty()) detail = "query 1 set mismatch";
    }
    // why didn't L1 execute (2: the failed sibling and its cause)
    if (ok) {
        auto res = counterfactual_search(
            m, mem, simple_query(expl_var::exec("L1"), value(false), {value(true)},
                                 mem.index_of_node_time(2)),
            3, 10);
        ok &= matches(m, res,
                      {{{{"r.L0", "Failure"}}, {{"r.L0", "Success"}}, {{"E.L1", "true"}}},
                       {{{"Xa.0", "false"}}, {{"Xa.0", "true"}}, {{"E.L1", "true"}}}});
        if (!ok && detail.empty()) detail = "query 2 set mismatch";
    }
    // why a2 over a3 (3: both carried versions of Xb, and Xd)
    if (ok) {
        auto res = counterfactual_search(
            m, mem, simple_query(expl_var::decision("L2"), value("a2"), {value("a3")},
                                 mem.index_of_node_time(3)),
            3, 10);
        ok &= matches(m, res,
                      {{{{"Xb.0", "false"}}, {{"Xb.0", "true"}}, {{"d.L2", "a3"}}},
                       {{{"Xb.1", "false"}}, {{"Xb.1", "true"}}, {{"d.L2", "a3"}}},
                       {{{"Xd.0", "true"}}, {{"Xd.0", "false"}}, {{"d.L2", "a3"}}}});
        if (!ok && detail.empty()) detail = "query 3 set mismatch";
    }
    // why was Xc false (1, at depth 2)
    if (ok) {
        auto res = counterfactual_search(
            m, mem, simple_query(expl_var::state("Xc", 0), value(false), {value(true)},
                                 mem.index_of_node_time(2)),
            3, 10);
        ok &= res.depth == 2;
        ok &= matches(m, res,
                      {{{{"Xa.1", "false"}, {"Xb.0", "false"}},
                        {{"Xa.1", "true"}, {"Xb.0", "true"}},
                        {{"Xc.0", "true"}}}});
        if (!ok && detail.empty()) detail = "query 4 set mismatch";
    }
    // why did L0 fail (exactly one explanation)
    if (ok) {
        auto res = counterfactual_search(
            m, mem, simple_query(expl_var::ret("L0"), value(status::failure),
                                 {value(status::success)}, mem.index_of_node_time(1)),
            3, 10);
        ok &= matches(m, res,
                      {{{{"Xa.0", "false"}}, {{"Xa.0", "true"}}, {{"r.L0", "Success"}}}});
        if (!ok && detail.empty()) detail = "single-cause query mismatch";
    }

    auto elapsed = std::chrono::duration<double>(clock_type::now() - started).count();
    if (elapsed >= 1.0) {
        ok = false;
        detail = "took " + std::to_string(elapsed) + "s";
    }
    report("case-study explanation sets (exact, < 1 s)", ok, detail);
}

// ---- criterion 2: model structure and intervention outcomes --------------

void criterion_model_structure() {
    domain d = case_study_domain();
    expl_model m = expl_model::build(d.tree, d.model);

    std::set<std::string> names;
    for (int i = 0; i < m.size(); ++i) names.insert(m.var(i).to_string());
    const std::set<std::string> expected{
        "E.sel", "E.seq", "E.L0", "E.L1", "E.L2", "r.sel", "r.seq", "r.L0", "r.L1", "r.L2",
        "d.L1", "d.L2", "Xa.0", "Xa.1", "Xb.0", "Xb.1", "Xb.2", "Xc.0", "Xd.0"};
    bool ok = names == expected;
    std::string detail = ok ? "" : "variable set differs";

    episodic_memory mem;
    run(d, {{"Xa", value(false)}, {"Xb", value(false)}}, 1, mem);
    auto rec = reconstruct(m, mem, 1);
    int r0 = m.index_of(expl_var::ret("L0"));
    auto outcome = [&](const expl_var& v, value val) {
        return do_intervene(m, rec.values, {{m.index_of(v), val}}, rec.tick_initial).at(r0);
    };
    ok &= outcome(expl_var::exec("sel"), value(false)) == value(status::invalid);
    ok &= outcome(expl_var::exec("seq"), value(false)) == value(status::invalid);
    ok &= outcome(expl_var::exec("L0"), value(false)) == value(status::invalid);
    ok &= outcome(expl_var::state("Xa", 0), value(true)) == value(status::success);
    if (!ok && detail.empty()) detail = "intervention outcomes differ";
    report("case-study model structure (19 variables, 4 intervention outcomes)", ok, detail);
}

// ---- criterion 3: random-domain target recovery ---------------------------

void criterion_random_recovery() {
    auto started = clock_type::now();
    random_sweep_options opt; // {2,4,8} x {4,8,12} x {0,0.5,1} x 3 seeds
    auto rep = run_random_sweep(opt);

    bool ok = rep.total.missed == 0 && rep.total.found > 0;
    std::string detail = "found " + std::to_string(rep.total.found) + ", no-difference " +
                         std::to_string(rep.total.no_difference) + ", missed " +
                         std::to_string(rep.total.missed);

    // mean model size must grow along both axes
    std::map<std::pair<int, int>, double> mean;
    for (const auto& row : rep.rows) {
        double sum = 0;
        for (int n : row.stats.model_nodes) sum += n;
        mean[{row.vars, row.leaves}] = sum / double(row.stats.model_nodes.size());
    }
    for (int vars : {4, 8, 12}) {
        if (!(mean[{vars, 2}] < mean[{vars, 4}] && mean[{vars, 4}] < mean[{vars, 8}])) {
            ok = false;
            detail += "; node counts not increasing in leaves at vars=" + std::to_string(vars);
        }
    }
    for (int leaves : {2, 4, 8}) {
        if (!(mean[{4, leaves}] < mean[{8, leaves}] && mean[{8, leaves}] < mean[{12, leaves}])) {
            ok = false;
            detail += "; node counts not increasing in vars at leaves=" + std::to_string(leaves);
        }
    }

    auto elapsed = std::chrono::duration<double>(clock_type::now() - started).count();
    if (elapsed >= 300.0) {
        ok = false;
        detail += "; took " + std::to_string(elapsed) + "s";
    }
    report("random-domain target recovery (rate 1.0, growing model sizes, < 5 min)", ok, detail);
}

// ---- criterion 4: serial-recall recovery ----------------------------------

void criterion_recall_recovery() {
    recall_sweep_options opt; // 4 profiles x 10 seeds
    auto rep = run_recall_sweep(opt);
    bool ok = rep.total.missed == 0 && rep.total.found > 0;
    report("serial-recall recovery (4 profiles x 10 seeds, rate 1.0)", ok,
           "found " + std::to_string(rep.total.found) + ", no-difference " +
               std::to_string(rep.total.no_difference) + ", missed " +
               std::to_string(rep.total.missed));
}

// ---- criterion 5: property suites over 200 random domains -----------------

bool replay_matches(const domain& d, const expl_model& m, const episodic_memory& mem) {
    for (std::int64_t tick = 1;; ++tick) {
        std::int64_t end;
        try {
            end = mem.tick_end_index(tick);
        } catch (const error&) {
            break;
        }
        auto [start, tick_no] = mem.tick_span_start(end);
        assignment tick_initial = mem.slice_until(start - 1).state;
        auto full = evaluate_full(m, tick_initial);

        std::map<std::string, status> recorded;
        std::map<std::string, std::string> actions;
        for (std::int64_t i = start; i <= end; ++i) {
            const event& e = mem.at(i);
            if (e.k != event::kind::node_result) continue;
            recorded[e.node_id] = e.st;
            if (!e.action.empty()) actions[e.node_id] = e.action;
        }
        for (int i = 0; i < m.size(); ++i) {
            const expl_var& v = m.var(i);
            if (v.f == expl_var::facet::ret) {
                status want = recorded.count(v.id) ? recorded.at(v.id) : status::invalid;
                if (full.at(i) != value(want)) return false;
            } else if (v.f == expl_var::facet::exec) {
                if (full.at(i) != value(recorded.count(v.id) > 0)) return false;
            } else if (v.f == expl_var::facet::decision) {
                std::string want = actions.count(v.id) ? actions.at(v.id) : noop_action;
                if (full.at(i) != value(want)) return false;
            }
        }
        assignment end_state = mem.slice_until(end).state;
        for (const auto& name : d.model->top_level_variables()) {
            int idx = m.index_of(expl_var::state(name, m.last_version_of(name)));
            if (full.at(idx) != end_state.at(name)) return false;
        }
    }
    return true;
}

void criterion_property_suites() {
    const int domains = 200;
    const int d_max = 2;
    int audited = 0, replays = 0, searches = 0, oracle_checked = 0;
    bool ok = true;
    std::string detail;
    auto fail_with = [&](const std::string& why, std::uint64_t seed) {
        if (ok) detail = why + " (domain seed " + std::to_string(seed) + ")";
        ok = false;
    };

    for (std::uint64_t seed = 0; seed < domains && ok; ++seed) {
        random_domain_spec spec;
        spec.num_leaves = 2 + static_cast<int>(seed % 7);       // 2..8
        spec.num_state_vars = 4 + static_cast<int>(seed % 9);   // 4..12
        spec.connectivity = static_cast<double>(seed % 5) * 0.25;
        spec.seed = seed;
        domain d = random_domain(spec);
        expl_model m = expl_model::build(d.tree, d.model);

        // DAG plus rule audit: the edge set re-derives from the construction
        // rules, one rule per edge
        if (static_cast<int>(m.topo_order().size()) != m.size()) {
            fail_with("topological order incomplete", seed);
            break;
        }
        auto tagged = oracle::derive_edges(*d.tree, *d.model);
        std::set<std::pair<std::string, std::string>> expected;
        std::map<std::pair<std::string, std::string>, std::set<std::string>> rules;
        for (const auto& e : tagged) {
            expected.insert({e.from, e.to});
            rules[{e.from, e.to}].insert(e.rule);
        }
        std::set<std::pair<std::string, std::string>> actual;
        for (const auto& [a, b] : m.edges())
            actual.insert({m.var(a).to_string(), m.var(b).to_string()});
        if (actual != expected) {
            fail_with("edge set does not re-derive from the rules", seed);
            break;
        }
        for (const auto& [edge, rs] : rules)
            if (rs.size() != 1) fail_with("edge with ambiguous rule", seed);
        ++audited;

        episodic_memory mem;
        run(d, d.default_init, 2, mem);
        if (!replay_matches(d, m, mem)) {
            fail_with("replay fidelity broken", seed);
            break;
        }
        ++replays;

        // queries over recorded leaf results: the last one, plus an action
        // decision if any leaf took a real action
        std::vector<query> queries;
        const event* last_leaf = nullptr;
        const event* acted = nullptr;
        for (const auto& e : mem.events()) {
            if (e.k != event::kind::node_result || !d.tree->node(e.node_id).is_leaf()) continue;
            last_leaf = &e;
            if (!e.action.empty() && e.action != noop_action) acted = &e;
        }
        if (last_leaf) {
            foil_spec foil;
            for (status s :
                 m.range(m.index_of(expl_var::ret(last_leaf->node_id))).statuses)
                if (s != last_leaf->st) foil.values.push_back(value(s));
            queries.push_back(simple_query(expl_var::ret(last_leaf->node_id),
                                           value(last_leaf->st), {}, last_leaf->index));
            queries.back().foils[0] = foil;
        }
        if (acted) {
            foil_spec foil;
            for (const auto& a :
                 m.range(m.index_of(expl_var::decision(acted->node_id))).actions)
                if (a != acted->action) foil.values.push_back(value(a));
            queries.push_back(simple_query(expl_var::decision(acted->node_id),
                                           value(acted->action), {}, acted->index));
            queries.back().foils[0] = foil;
        }

        for (const auto& q : queries) {
            search_result res;
            bool none = false;
            try {
                res = counterfactual_search(m, mem, q, d_max, 10);
            } catch (const error& e) {
                if (e.code() != errc::no_explanation_found) throw;
                none = true;
            }
            ++searches;
            auto rec = reconstruct(m, mem, q.time);
            int target = m.index_of(q.targets[0]);
            int searchable = static_cast<int>(m.ancestors_of({target}).size());
            if (none) {
                if (searchable > 0 && searchable <= 20) {
                    for (int depth = 1; depth <= d_max; ++depth)
                        if (!oracle::brute_force_hits(m, mem, q, depth, 10).empty())
                            fail_with("search missed an existing intervention", seed);
                    ++oracle_checked;
                }
                continue;
            }
            // validity at zero tolerance
            for (const auto& e : res.explanations) {
                std::vector<std::pair<int, value>> interventions;
                for (const auto& c : e.changes) interventions.emplace_back(c.var, c.counterfactual);
                auto after = do_intervene(m, rec.values, interventions, rec.tick_initial);
                if (!q.foils[0].matches(after.at(target)))
                    fail_with("invalid counterfactual returned", seed);
            }
            if (searchable <= 20) {
                for (int depth = 1; depth < res.depth; ++depth)
                    if (!oracle::brute_force_hits(m, mem, q, depth, 10).empty())
                        fail_with("returned depth is not minimal", seed);
                if (oracle::explanation_set(m, res) !=
                    oracle::brute_force_hits(m, mem, q, res.depth, 10))
                    fail_with("result set incomplete at the minimal depth", seed);
                ++oracle_checked;
            }
        }
    }

    if (ok)
        detail = std::to_string(audited) + " audits, " + std::to_string(replays) + " replays, " +
                 std::to_string(searches) + " searches (" + std::to_string(oracle_checked) +
                 " oracle-checked)";
    ok &= audited == domains && replays == domains && oracle_checked >= 100;
    report("property suites on 200 random domains (validity, minimality, completeness, "
           "replay, rule audit)",
           ok, detail);
}

} // namespace

int main() {
    criterion_explanation_sets();
    criterion_model_structure();
    criterion_random_recovery();
    criterion_recall_recovery();
    criterion_property_suites();
    std::cout << (g_failures == 0 ? "acceptance: all criteria satisfied\n"
                                  : "acceptance: " + std::to_string(g_failures) +
                                        " criterion(s) failing\n");
    return g_failures == 0 ? 0 : 1;
}
