#include "btx/domains.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "btx/executor.hpp"

namespace btx {

namespace {

struct leaf_event {
    std::string node;
    status st;
    std::string action;
    std::int64_t index;
};

std::vector<leaf_event> leaf_events(const episodic_memory& mem, const bt_tree& tree) {
    std::vector<leaf_event> out;
    for (const auto& e : mem.events()) {
        if (e.k != event::kind::node_result) continue;
        if (!tree.node(e.node_id).is_leaf()) continue;
        out.push_back({e.node_id, e.st, e.action, e.index});
    }
    return out;
}

} // namespace

recovery_outcome target_recovery(const domain& d, const expl_model& m,
                                 const assignment& default_init,
                                 const std::string& perturbed_variable,
                                 const value& perturbed_value, int d_max, int bins) {
    recovery_outcome out;
    out.model_nodes = m.size();

    episodic_memory default_mem;
    run(d, default_init, 1, default_mem);
    assignment altered_init = default_init;
    altered_init[perturbed_variable] = perturbed_value;
    episodic_memory altered_mem;
    run(d, altered_init, 1, altered_mem);

    const auto def_events = leaf_events(default_mem, *d.tree);
    const auto alt_events = leaf_events(altered_mem, *d.tree);

    size_t j = 0;
    while (j < def_events.size() && j < alt_events.size() &&
           def_events[j].node == alt_events[j].node && def_events[j].st == alt_events[j].st &&
           def_events[j].action == alt_events[j].action)
        ++j;
    if (j == def_events.size() && j == alt_events.size()) {
        out.k = recovery_outcome::kind::no_difference;
        return out;
    }
    // identical prefixes route both runs to the same next leaf
    if (j >= def_events.size() || j >= alt_events.size() ||
        def_events[j].node != alt_events[j].node)
        fail(errc::validation, "executions diverged in structure, not in a node result");

    const leaf_event& def_ev = def_events[j];
    const leaf_event& alt_ev = alt_events[j];

    query q;
    q.time = alt_ev.index;
    foil_spec foil;
    if (def_ev.st != alt_ev.st) {
        q.targets.push_back(expl_var::ret(alt_ev.node));
        q.facts.push_back(value(alt_ev.st));
        foil.values.push_back(value(def_ev.st));
    } else {
        q.targets.push_back(expl_var::decision(alt_ev.node));
        q.facts.push_back(value(alt_ev.action));
        foil.values.push_back(value(def_ev.action));
    }
    q.foils.push_back(foil);
    out.q = q;

    try {
        search_result res = counterfactual_search(m, altered_mem, q, d_max, bins);
        out.explanations = res.explanations;
    } catch (const error& e) {
        if (e.code() != errc::no_explanation_found) throw;
        out.k = recovery_outcome::kind::missed;
        return out;
    }

    // the perturbed variable counts as recovered whichever temporal version
    // of it the reasons name
    bool found = false;
    for (const auto& e : out.explanations)
        for (const auto& c : e.changes) {
            const expl_var& v = m.var(c.var);
            if (v.f == expl_var::facet::state && v.id == perturbed_variable) found = true;
        }
    out.k = found ? recovery_outcome::kind::recovered : recovery_outcome::kind::missed;
    return out;
}

namespace {

void fold_outcome(sweep_stats& s, const recovery_outcome& o) {
    switch (o.k) {
        case recovery_outcome::kind::no_difference: s.no_difference += 1; break;
        case recovery_outcome::kind::recovered:
            s.found += 1;
            s.explanation_counts.push_back(static_cast<int>(o.explanations.size()));
            break;
        case recovery_outcome::kind::missed:
            s.missed += 1;
            s.explanation_counts.push_back(static_cast<int>(o.explanations.size()));
            break;
    }
}

struct dist {
    int lo = 0, hi = 0;
    double mean = 0, stddev = 0;
};

dist describe(const std::vector<int>& xs) {
    dist d;
    if (xs.empty()) return d;
    d.lo = *std::min_element(xs.begin(), xs.end());
    d.hi = *std::max_element(xs.begin(), xs.end());
    double sum = 0;
    for (int x : xs) sum += x;
    d.mean = sum / static_cast<double>(xs.size());
    double var = 0;
    for (int x : xs) var += (x - d.mean) * (x - d.mean);
    d.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return d;
}

nlohmann::json stats_to_json(const sweep_stats& s) {
    auto nodes = describe(s.model_nodes);
    auto expl = describe(s.explanation_counts);
    return {
        {"target_found", s.found},
        {"no_difference", s.no_difference},
        {"missed", s.missed},
        {"recovery_rate", s.rate()},
        {"model_nodes", {{"min", nodes.lo}, {"max", nodes.hi}, {"mean", nodes.mean}, {"std", nodes.stddev}}},
        {"explanations", {{"min", expl.lo}, {"max", expl.hi}, {"mean", expl.mean}, {"std", expl.stddev}}},
    };
}

} // namespace

nlohmann::json sweep_report::to_json() const {
    nlohmann::json out;
    auto& rs = out["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json row = stats_to_json(r.stats);
        row["label"] = r.label;
        if (r.vars > 0) row["state_vars"] = r.vars;
        if (r.leaves > 0) row["leaves"] = r.leaves;
        rs.push_back(std::move(row));
    }
    out["all"] = stats_to_json(total);
    out["recovery_rate"] = total.rate();
    return out;
}

std::string sweep_report::to_table() const {
    std::ostringstream os;
    os << std::left << std::setw(22) << "cell" << std::right << std::setw(7) << "found"
       << std::setw(8) << "nodiff" << std::setw(8) << "missed" << std::setw(7) << "rate"
       << std::setw(22) << "model nodes" << std::setw(22) << "explanations" << "\n";
    auto line = [&](const std::string& label, const sweep_stats& s) {
        auto nodes = describe(s.model_nodes);
        auto expl = describe(s.explanation_counts);
        std::ostringstream nd, ed;
        nd << nodes.lo << "/" << nodes.hi << "/" << std::fixed << std::setprecision(1)
           << nodes.mean << " (" << nodes.stddev << ")";
        ed << expl.lo << "/" << expl.hi << "/" << std::fixed << std::setprecision(1) << expl.mean
           << " (" << expl.stddev << ")";
        os << std::left << std::setw(22) << label << std::right << std::setw(7) << s.found
           << std::setw(8) << s.no_difference << std::setw(8) << s.missed << std::setw(7)
           << std::fixed << std::setprecision(2) << s.rate() << std::setw(22) << nd.str()
           << std::setw(22) << ed.str() << "\n";
    };
    for (const auto& r : rows) line(r.label, r.stats);
    line("all", total);
    return os.str();
}

sweep_report run_random_sweep(const random_sweep_options& opt) {
    sweep_report report;
    std::map<std::pair<int, int>, sweep_stats> cells; // (vars, leaves)
    for (int vars : opt.vars) {
        for (int leaves : opt.leaves) {
            sweep_stats& cell = cells[{vars, leaves}];
            for (double conn : opt.connectivity) {
                for (int seed = 0; seed < opt.seeds; ++seed) {
                    random_domain_spec spec;
                    spec.num_leaves = leaves;
                    spec.num_state_vars = vars;
                    spec.connectivity = conn;
                    spec.seed = static_cast<std::uint64_t>(seed);
                    domain d = random_domain(spec);
                    expl_model m = expl_model::build(d.tree, d.model);
                    cell.model_nodes.push_back(m.size());
                    report.total.model_nodes.push_back(m.size());
                    for (const auto& name : d.model->top_level_variables()) {
                        value flipped(!d.default_init.at(name).as_bool());
                        auto outcome = target_recovery(d, m, d.default_init, name, flipped,
                                                       opt.d_max, opt.bins);
                        fold_outcome(cell, outcome);
                        fold_outcome(report.total, outcome);
                    }
                }
            }
        }
    }
    for (const auto& [key, stats] : cells) {
        sweep_row row;
        row.vars = key.first;
        row.leaves = key.second;
        row.label = "vars=" + std::to_string(key.first) + " leaves=" + std::to_string(key.second);
        row.stats = stats;
        report.rows.push_back(std::move(row));
    }
    return report;
}

sweep_report run_recall_sweep(const recall_sweep_options& opt) {
    sweep_report report;
    domain d = serial_recall_domain();
    expl_model m = expl_model::build(d.tree, d.model);
    const std::map<std::string, std::pair<std::string, double>> perturbations = {
        {"frustrated", {"frustration", 1.0}},
        {"no_attention", {"attention", 0.0}},
        {"no_reactivity", {"reactivity", 0.0}},
        {"no_memory", {"memory", 0.0}},
    };
    for (const auto& profile : opt.profiles) {
        auto it = perturbations.find(profile);
        if (it == perturbations.end()) fail(errc::validation, "unknown profile '" + profile + "'");
        sweep_row row;
        row.label = profile;
        row.stats.model_nodes.push_back(m.size());
        for (int seed = 0; seed < opt.seeds; ++seed) {
            assignment init = serial_recall_profile("default", static_cast<std::uint64_t>(seed));
            auto outcome = target_recovery(d, m, init, it->second.first, value(it->second.second),
                                           opt.d_max, opt.bins);
            fold_outcome(row.stats, outcome);
            fold_outcome(report.total, outcome);
        }
        report.rows.push_back(std::move(row));
    }
    report.total.model_nodes.push_back(m.size());
    return report;
}

} // namespace btx
