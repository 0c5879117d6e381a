#include <doctest.h>

#include <nlohmann/json.hpp>

#include "btx/domains.hpp"
#include "btx/executor.hpp"

using namespace btx;

namespace {

std::vector<std::string> result_nodes(const episodic_memory& mem) {
    std::vector<std::string> out;
    for (const auto& e : mem.events())
        if (e.k == event::kind::node_result) out.push_back(e.node_id);
    return out;
}

} // namespace

TEST_CASE("failing condition routes the tick to the recovery branch") {
    domain d = case_study_domain();
    episodic_memory mem;
    auto statuses = run(d, {{"Xa", value(false)}, {"Xb", value(false)}}, 1, mem);
    REQUIRE(statuses.size() == 1);
    CHECK(statuses[0] == status::success); // root takes L2's status

    // L0 fails, L1 is skipped entirely, L2 runs and writes Xb
    CHECK(result_nodes(mem) == std::vector<std::string>{"L0", "seq", "L2", "sel"});
    CHECK(mem.at(1).st == status::failure);
    CHECK(mem.at(3).k == event::kind::state_change);
    CHECK(mem.at(3).variable == "Xb");
    CHECK(mem.at(5).action == "a2");
    CHECK(mem.events().back().k == event::kind::tick_boundary);
}

TEST_CASE("passing condition walks the sequence and skips the recovery branch") {
    domain d = case_study_domain();
    episodic_memory mem;
    auto statuses = run(d, {{"Xa", value(true)}, {"Xb", value(false)}}, 1, mem);
    CHECK(statuses[0] == status::success);
    CHECK(result_nodes(mem) == std::vector<std::string>{"L0", "L1", "seq", "sel"});
    CHECK(mem.at(1).st == status::success);
    // L1 copies Xa into Xb
    auto end = mem.slice_until(mem.last_index());
    CHECK(end.state.at("Xb") == value(true));
    CHECK(end.state.at("Xc") == value(true));
    CHECK(end.state.at("Xd") == value(false));
}

TEST_CASE("a single condition leaf is a valid tree") {
    auto tree = nlohmann::json::parse(R"({
        "root": {"id": "only", "kind": "condition", "inputs": ["a"],
                 "behaviour": {"return": {"default": "Success"}}}
    })");
    auto model = nlohmann::json::parse(R"({"variables": [{"name":"a","range":"boolean"}]})");
    domain d = domain::load(tree, model, {{"a", value(false)}}, "single");
    episodic_memory mem;
    auto statuses = run(d, d.default_init, 1, mem);
    CHECK(statuses[0] == status::success);
    REQUIRE(mem.last_index() == 2); // one node result, one tick boundary
    CHECK(mem.at(1).k == event::kind::node_result);
    CHECK(mem.at(2).k == event::kind::tick_boundary);
}

TEST_CASE("two ticks from identical states record identical events") {
    domain d = case_study_domain();
    episodic_memory a, b;
    run(d, d.default_init, 1, a);
    run(d, d.default_init, 1, b);
    CHECK(a.to_jsonl() == b.to_jsonl());
}

TEST_CASE("navigation follows the declared child order") {
    domain d = case_study_domain();
    const bt_tree& t = *d.tree;
    CHECK(t.left_sibling(t.node("L1")) == &t.node("L0"));
    CHECK(t.left_sibling(t.node("L0")) == nullptr);
    CHECK(t.left_sibling(t.node("sel")) == nullptr);
    CHECK(t.parent(t.node("L2")) == &t.node("sel"));
    CHECK(&t.leftmost_child(t.node("sel")) == &t.node("seq"));
    CHECK_THROWS_AS((void)t.node("missing"), error);
}

TEST_CASE("composite statuses recompute from child events") {
    // every recorded composite result must equal the composition of its
    // children's recorded (or Invalid) statuses
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        random_domain_spec spec;
        spec.num_leaves = 6;
        spec.num_state_vars = 6;
        spec.connectivity = 0.5;
        spec.seed = seed;
        domain d = random_domain(spec);
        episodic_memory mem;
        run(d, d.default_init, 1, mem);

        std::map<std::string, status> seen;
        for (const auto& e : mem.events()) {
            if (e.k != event::kind::node_result) continue;
            const bt_node& n = d.tree->node(e.node_id);
            if (n.is_composite()) {
                const bool seq = n.kind == node_kind::sequence;
                status expect = seq ? status::success : status::failure;
                for (const auto& c : n.children) {
                    auto it = seen.find(c->id);
                    status cs = it == seen.end() ? status::invalid : it->second;
                    if (it == seen.end()) break; // unvisited children end the scan
                    if (seq && cs != status::success) {
                        expect = cs;
                        break;
                    }
                    if (!seq && cs != status::failure) {
                        expect = cs;
                        break;
                    }
                }
                CHECK(e.st == expect);
            }
            seen[e.node_id] = e.st;
        }
    }
}

TEST_CASE("a node is visited exactly when its execution condition holds") {
    for (std::uint64_t seed = 40; seed < 60; ++seed) {
        random_domain_spec spec;
        spec.num_leaves = 8;
        spec.num_state_vars = 8;
        spec.connectivity = 1.0;
        spec.seed = seed;
        domain d = random_domain(spec);
        episodic_memory mem;
        run(d, d.default_init, 1, mem);

        std::set<std::string> visited;
        std::map<std::string, status> statuses;
        for (const auto& e : mem.events())
            if (e.k == event::kind::node_result) {
                CHECK(!visited.count(e.node_id)); // exactly one result per node
                visited.insert(e.node_id);
                statuses[e.node_id] = e.st;
            }
        for (const bt_node* n : d.tree->preorder()) {
            const bt_node* p = d.tree->parent(*n);
            bool expect;
            if (!p)
                expect = true;
            else if (d.tree->is_leftmost(*n))
                expect = visited.count(p->id) > 0;
            else {
                const bt_node* sib = d.tree->left_sibling(*n);
                auto it = statuses.find(sib->id);
                expect = it != statuses.end() &&
                         (p->kind == node_kind::sequence ? it->second == status::success
                                                         : it->second == status::failure);
            }
            CHECK(visited.count(n->id) == (expect ? 1u : 0u));
        }
    }
}

TEST_CASE("leaf writes outside the declared range are rejected") {
    auto tree = nlohmann::json::parse(R"({
        "root": {"id": "root", "kind": "sequence", "children": [
            {"id": "c", "kind": "condition", "inputs": [],
             "behaviour": {"return": {"default": "Success"}}},
            {"id": "w", "kind": "action", "outputs": ["x"], "actions": ["go"],
             "behaviour": {"decide": {"default": "go"},
                            "effect": {"default": {"x": 7}},
                            "return": {"default": "Success"}}}
        ]}
    })");
    auto model = nlohmann::json::parse(
        R"({"variables": [{"name":"x","range":{"kind":"continuous","lo":0,"hi":1}}]})");
    domain d = domain::load(tree, model, {{"x", value(0.0)}}, "bad");
    episodic_memory mem;
    CHECK_THROWS_AS(run(d, d.default_init, 1, mem), error);
}

TEST_CASE("undeclared input and output names are rejected at validation") {
    auto model = nlohmann::json::parse(R"({"variables": [{"name":"x","range":"boolean"}]})");
    auto bad_input = nlohmann::json::parse(R"({
        "root": {"id": "c", "kind": "condition", "inputs": ["ghost"],
                 "behaviour": {"return": {"default": "Success"}}}
    })");
    CHECK_THROWS_AS(domain::load(bad_input, model, {}, "x"), error);

    auto derived_output = nlohmann::json::parse(R"({
        "root": {"id": "root", "kind": "sequence", "children": [
            {"id": "a", "kind": "condition", "inputs": ["x"],
             "behaviour": {"return": {"default": "Success"}}},
            {"id": "w", "kind": "action", "outputs": ["y"], "actions": ["go"],
             "behaviour": {"decide": {"default": "go"},
                            "effect": {"default": {"y": true}},
                            "return": {"default": "Success"}}}
        ]}
    })");
    auto model_xy = nlohmann::json::parse(R"({
        "variables": [{"name":"x","range":"boolean"},{"name":"y","range":"boolean"}],
        "edges": [["x","y"]],
        "functions": {"y": {"var":"x"}}
    })");
    // y is derived from x, so the tree must not write it
    CHECK_THROWS_AS(domain::load(derived_output, model_xy, {}, "x"), error);
}

TEST_CASE("conditions may not return Running") {
    auto tree = nlohmann::json::parse(R"({
        "root": {"id": "c", "kind": "condition", "inputs": [],
                 "behaviour": {"return": {"default": "Running"}}}
    })");
    auto model = nlohmann::json::parse(R"({"variables": [{"name":"x","range":"boolean"}]})");
    domain d = domain::load(tree, model, {{"x", value(false)}}, "x");
    episodic_memory mem;
    CHECK_THROWS_AS(run(d, d.default_init, 1, mem), error);
}

TEST_CASE("running propagates through the composition and ends the tick") {
    auto tree = nlohmann::json::parse(R"({
        "root": {"id": "root", "kind": "sequence", "children": [
            {"id": "busy", "kind": "action", "inputs": [], "actions": ["work"],
             "behaviour": {"decide": {"default": "work"}, "return": {"default": "Running"}}},
            {"id": "after", "kind": "condition", "inputs": [],
             "behaviour": {"return": {"default": "Success"}}}
        ]}
    })");
    auto model = nlohmann::json::parse(R"({"variables": [{"name":"x","range":"boolean"}]})");
    domain d = domain::load(tree, model, {{"x", value(false)}}, "x");
    episodic_memory mem;
    auto statuses = run(d, d.default_init, 2, mem);
    CHECK(statuses == std::vector<status>{status::running, status::running});
    CHECK(result_nodes(mem) == std::vector<std::string>{"busy", "root", "busy", "root"});
}
