#include "btx/domains.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "btx/rng.hpp"

namespace btx {

namespace {

constexpr int max_parents = 4;
constexpr int max_inputs = 3;

std::vector<std::string> sample_distinct(rng& r, const std::vector<std::string>& pool, size_t n) {
    std::vector<std::string> xs = pool;
    std::vector<std::string> out;
    for (size_t i = 0; i < n && !xs.empty(); ++i) {
        size_t j = r.below(xs.size());
        out.push_back(xs[j]);
        xs.erase(xs.begin() + static_cast<std::ptrdiff_t>(j));
    }
    return out;
}

} // namespace

state_model random_state_graph(const random_domain_spec& spec) {
    if (spec.num_state_vars < 2) fail(errc::validation, "need at least 2 state variables");
    rng r(spec.seed * 0x9e3779b97f4a7c15ULL + 0xd1b54a32d192ed03ULL);

    const int n = spec.num_state_vars;
    const int n_top = std::max(1, n / 2);

    nlohmann::json j;
    auto& vars = j["variables"] = nlohmann::json::array();
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) {
        names.push_back("x" + std::to_string(i));
        vars.push_back({{"name", names.back()}, {"range", "boolean"}});
    }
    auto& edges = j["edges"] = nlohmann::json::array();
    auto& fns = j["functions"] = nlohmann::json::object();

    // earlier-to-later wiring keeps the graph acyclic by construction
    for (int i = n_top; i < n; ++i) {
        const int avail = i;
        const int cap = std::min(avail, max_parents);
        int count = 1 + static_cast<int>(std::llround(spec.connectivity * (cap - 1)));
        count = std::clamp(count, 1, cap);
        std::vector<std::string> pool(names.begin(), names.begin() + i);
        auto parents = sample_distinct(r, pool, static_cast<size_t>(count));
        std::sort(parents.begin(), parents.end());
        nlohmann::json fn{{"var", parents[0]}};
        for (size_t p = 1; p < parents.size(); ++p) {
            const char* op = r.chance(0.5) ? "and" : "or";
            fn = nlohmann::json{{"op", op}, {"args", {fn, nlohmann::json{{"var", parents[p]}}}}};
        }
        for (const auto& p : parents) edges.push_back({p, names[static_cast<size_t>(i)]});
        fns[names[static_cast<size_t>(i)]] = fn;
    }
    return state_model::from_json(j);
}

namespace {

nlohmann::json random_leaf(rng& r, int index, const state_model& sm) {
    const std::string id = "l" + std::to_string(index);
    std::vector<std::string> all_vars;
    for (const auto& v : sm.variables) all_vars.push_back(v.name);
    const auto top_vars = sm.top_level_variables();

    const bool is_condition = r.chance(0.4);
    size_t n_inputs = 1 + r.below(std::min<size_t>(max_inputs, all_vars.size()));
    if (!is_condition && r.chance(0.1)) n_inputs = 0; // occasional blind action
    auto inputs = sample_distinct(r, all_vars, n_inputs);
    std::sort(inputs.begin(), inputs.end());

    nlohmann::json leaf{{"id", id}, {"kind", is_condition ? "condition" : "action"}};
    if (!inputs.empty()) leaf["inputs"] = inputs;

    // every combination of the boolean inputs gets an explicit row
    std::vector<assignment> rows;
    const size_t combos = size_t{1} << inputs.size();
    for (size_t mask = 0; mask < combos; ++mask) {
        assignment a;
        for (size_t b = 0; b < inputs.size(); ++b) a[inputs[b]] = value((mask >> b & 1) != 0);
        rows.push_back(std::move(a));
    }
    auto when_of = [](const assignment& a) {
        nlohmann::json w = nlohmann::json::object();
        for (const auto& [k, v] : a) w[k] = value_to_json(v);
        return w;
    };

    nlohmann::json behaviour;
    if (is_condition) {
        nlohmann::json ret{{"default", "Failure"}};
        auto& rules = ret["rules"] = nlohmann::json::array();
        for (const auto& row : rows)
            if (r.chance(0.5)) rules.push_back({{"when", when_of(row)}, {"value", "Success"}});
        behaviour["return"] = ret;
        leaf["behaviour"] = behaviour;
        return leaf;
    }

    const int n_actions = 1 + static_cast<int>(r.below(2));
    std::vector<std::string> actions{noop_action};
    for (int a = 0; a < n_actions; ++a) actions.push_back(id + "_a" + std::to_string(a));
    leaf["actions"] = actions;

    nlohmann::json decide{{"default", actions.back()}};
    auto& drules = decide["rules"] = nlohmann::json::array();
    for (const auto& row : rows) {
        const std::string& a = actions[r.below(actions.size())];
        drules.push_back({{"when", when_of(row)}, {"value", a}});
    }
    behaviour["decide"] = decide;

    nlohmann::json ret{{"default", "Failure"}};
    auto& rrules = ret["rules"] = nlohmann::json::array();
    for (const auto& row : rows) {
        double roll = r.unit();
        const char* st = roll < 0.45 ? "Success" : roll < 0.9 ? "Failure" : "Running";
        rrules.push_back({{"when", when_of(row)}, {"value", st}});
    }
    behaviour["return"] = ret;

    auto outputs = sample_distinct(r, top_vars, r.below(3));
    std::sort(outputs.begin(), outputs.end());
    if (!outputs.empty()) {
        leaf["outputs"] = outputs;
        nlohmann::json deflt = nlohmann::json::object();
        for (const auto& y : outputs) deflt[y] = false;
        nlohmann::json effect{{"default", deflt}};
        auto& erules = effect["rules"] = nlohmann::json::array();
        for (const auto& row : rows) {
            nlohmann::json writes = nlohmann::json::object();
            for (const auto& y : outputs) writes[y] = r.chance(0.5);
            erules.push_back({{"when", when_of(row)}, {"value", writes}});
        }
        behaviour["effect"] = effect;
    }
    leaf["behaviour"] = behaviour;
    return leaf;
}

} // namespace

bt_tree random_bt(const random_domain_spec& spec, const state_model& sm) {
    if (spec.num_leaves < 2) fail(errc::validation, "need at least 2 leaves");
    rng r(spec.seed * 0x2545f4914f6cdd1dULL + 0x9e3779b97f4a7c15ULL);

    // composite skeleton: n_comp nodes, each attached to a random earlier one
    const int max_comp = std::max(1, spec.num_leaves / 2);
    const int n_comp = 1 + static_cast<int>(r.below(static_cast<std::uint64_t>(max_comp)));
    std::vector<nlohmann::json> comps(static_cast<size_t>(n_comp));
    std::vector<std::vector<int>> comp_children(static_cast<size_t>(n_comp)); // sub-composites
    for (int i = 0; i < n_comp; ++i) {
        comps[static_cast<size_t>(i)] = {
            {"id", "c" + std::to_string(i)},
            {"kind", r.chance(0.5) ? "sequence" : "fallback"},
        };
        if (i > 0) comp_children[r.below(static_cast<std::uint64_t>(i))].push_back(i);
    }

    // leaves: first cover each composite's minimum arity, then spread the rest
    std::vector<std::vector<nlohmann::json>> leaves(static_cast<size_t>(n_comp));
    int made = 0;
    for (int i = 0; i < n_comp; ++i) {
        int have = static_cast<int>(comp_children[static_cast<size_t>(i)].size());
        for (int need = have; need < 2 && made < spec.num_leaves; ++need)
            leaves[static_cast<size_t>(i)].push_back(random_leaf(r, made++, sm));
    }
    while (made < spec.num_leaves) {
        size_t target = r.below(static_cast<std::uint64_t>(n_comp));
        leaves[target].push_back(random_leaf(r, made++, sm));
    }

    // assemble bottom-up (children of composite i only reference j > i)
    std::vector<nlohmann::json> built(static_cast<size_t>(n_comp));
    for (int i = n_comp - 1; i >= 0; --i) {
        nlohmann::json node = comps[static_cast<size_t>(i)];
        auto& children = node["children"] = nlohmann::json::array();
        std::vector<nlohmann::json> mixed;
        for (int sub : comp_children[static_cast<size_t>(i)])
            mixed.push_back(built[static_cast<size_t>(sub)]);
        for (auto& lf : leaves[static_cast<size_t>(i)]) {
            size_t pos = r.below(mixed.size() + 1);
            mixed.insert(mixed.begin() + static_cast<std::ptrdiff_t>(pos), lf);
        }
        for (auto& c : mixed) children.push_back(std::move(c));
        built[static_cast<size_t>(i)] = std::move(node);
    }

    bt_tree tree = bt_tree::from_json(nlohmann::json{{"root", built[0]}});
    tree.validate(sm);
    return tree;
}

domain random_domain(const random_domain_spec& spec) {
    domain d;
    d.model = std::make_shared<state_model>(random_state_graph(spec));
    d.tree = std::make_shared<bt_tree>(random_bt(spec, *d.model));
    rng r(spec.seed * 0x6a09e667f3bcc909ULL + 0x3c6ef372fe94f82bULL);
    for (const auto& name : d.model->top_level_variables()) d.default_init[name] = value(r.chance(0.5));
    d.name = "random_l" + std::to_string(spec.num_leaves) + "_v" +
             std::to_string(spec.num_state_vars) + "_c" + std::to_string(spec.connectivity) +
             "_s" + std::to_string(spec.seed);
    return d;
}

} // namespace btx
