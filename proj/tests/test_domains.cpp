#include <doctest.h>

#include <nlohmann/json.hpp>

#include "btx/domains.hpp"
#include "btx/executor.hpp"

using namespace btx;

TEST_CASE("random trees honour the structural contract") {
    SUBCASE("two leaves force the one possible shape") {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            random_domain_spec spec;
            spec.num_leaves = 2;
            spec.num_state_vars = 4;
            spec.seed = seed;
            domain d = random_domain(spec);
            CHECK(d.tree->root().is_composite());
            CHECK(d.tree->root().children.size() == 2);
            CHECK(d.tree->leaves().size() == 2);
        }
    }
    SUBCASE("identical specs serialize identically") {
        random_domain_spec spec;
        spec.num_leaves = 8;
        spec.num_state_vars = 8;
        spec.connectivity = 0.5;
        spec.seed = 42;
        domain a = random_domain(spec);
        domain b = random_domain(spec);
        CHECK(a.tree->to_json().dump() == b.tree->to_json().dump());
        CHECK(a.model->to_json().dump() == b.model->to_json().dump());
        CHECK(a.default_init == b.default_init);
    }
    SUBCASE("leaf counts and arities hold across seeds") {
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            random_domain_spec spec;
            spec.num_leaves = 8;
            spec.num_state_vars = 4;
            spec.connectivity = 0.25;
            spec.seed = seed;
            domain d = random_domain(spec);
            CHECK(d.tree->leaves().size() == 8);
            for (const bt_node* n : d.tree->preorder())
                if (n->is_composite()) CHECK(n->children.size() >= 2);
        }
    }
}

TEST_CASE("random state graphs scale edges with connectivity") {
    auto parent_counts = [](const state_model& sm) {
        std::vector<size_t> out;
        for (const auto& v : sm.variables)
            if (!sm.is_top_level(v.name)) out.push_back(sm.parents(v.name).size());
        return out;
    };
    SUBCASE("zero connectivity keeps one parent per derived variable") {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            random_domain_spec spec;
            spec.num_state_vars = 8;
            spec.connectivity = 0.0;
            spec.seed = seed;
            for (size_t c : parent_counts(random_state_graph(spec))) CHECK(c == 1);
        }
    }
    SUBCASE("full connectivity saturates up to the generator cap") {
        for (std::uint64_t seed = 0; seed < 25; ++seed) {
            random_domain_spec spec;
            spec.num_state_vars = 8;
            spec.connectivity = 1.0;
            spec.seed = seed;
            auto sm = random_state_graph(spec);
            size_t position = sm.top_level_variables().size();
            for (size_t c : parent_counts(sm)) {
                CHECK(c == std::min<size_t>(position, 4));
                ++position;
            }
        }
    }
    SUBCASE("half of four variables are top-level") {
        random_domain_spec spec;
        spec.num_state_vars = 4;
        spec.seed = 7;
        CHECK(random_state_graph(spec).top_level_variables().size() == 2);
    }
}

TEST_CASE("target recovery pins the perturbed variable on the worked example") {
    domain d = case_study_domain();
    expl_model m = expl_model::build(d.tree, d.model);
    assignment default_init{{"Xa", value(true)}, {"Xb", value(false)}};

    auto outcome = target_recovery(d, m, default_init, "Xa", value(false), 3, 10);
    REQUIRE(outcome.k == recovery_outcome::kind::recovered);
    REQUIRE(outcome.q.has_value());
    // the first divergence is L0 failing instead of succeeding
    CHECK(outcome.q->targets[0] == expl_var::ret("L0"));
    CHECK(outcome.q->facts[0] == value(status::failure));
    CHECK(outcome.q->foils[0].values == std::vector<value>{value(status::success)});
    REQUIRE(outcome.explanations.size() == 1);
    CHECK(m.var(outcome.explanations[0].changes[0].var).to_string() == "Xa.0");
    CHECK(outcome.explanations[0].changes[0].actual == value(false));
}

TEST_CASE("perturbing a variable nothing reads is no difference") {
    auto tree = nlohmann::json::parse(R"({
        "root": {"id": "root", "kind": "sequence", "children": [
            {"id": "a", "kind": "condition", "inputs": ["x"],
             "behaviour": {"return": {"default": "Success"}}},
            {"id": "b", "kind": "condition", "inputs": ["x"],
             "behaviour": {"return": {"rules": [{"when": {"x": true}, "value": "Success"}],
                                       "default": "Failure"}}}
        ]}
    })");
    auto model = nlohmann::json::parse(R"({
        "variables": [{"name":"x","range":"boolean"},{"name":"silent","range":"boolean"}]
    })");
    domain d = domain::load(tree, model, {{"x", value(true)}, {"silent", value(false)}}, "quiet");
    expl_model m = expl_model::build(d.tree, d.model);
    auto outcome = target_recovery(d, m, d.default_init, "silent", value(true), 3, 10);
    CHECK(outcome.k == recovery_outcome::kind::no_difference);
}

TEST_CASE("recall profiles start from the documented dimensions") {
    auto def = serial_recall_profile("default", 5);
    CHECK(def.at("attention") == value(0.8));
    CHECK(def.at("reactivity") == value(0.8));
    CHECK(def.at("memory") == value(0.8));
    CHECK(def.at("frustration") == value(0.0));
    auto fr = serial_recall_profile("frustrated", 5);
    CHECK(fr.at("frustration") == value(1.0));
    CHECK(fr.at("attention") == value(0.8));
    CHECK(serial_recall_profile("no_memory", 5).at("memory") == value(0.0));
    CHECK_THROWS_AS((void)serial_recall_profile("bogus", 0), error);
    // same seed, same noise; different seeds differ
    CHECK(serial_recall_profile("default", 9) == serial_recall_profile("default", 9));
    CHECK(serial_recall_profile("default", 9).at("noise_seed") !=
          serial_recall_profile("default", 10).at("noise_seed"));
}

TEST_CASE("recall perturbations diverge and recover") {
    domain d = serial_recall_domain();
    expl_model m = expl_model::build(d.tree, d.model);
    for (const char* profile : {"no_attention", "no_memory"}) {
        auto [var, val] = std::pair<std::string, double>(
            profile == std::string("no_attention") ? "attention" : "memory", 0.0);
        auto outcome = target_recovery(d, m, serial_recall_profile("default", 1), var, value(val),
                                       3, 10);
        REQUIRE(outcome.k == recovery_outcome::kind::recovered);
    }
}

TEST_CASE("sweep reports aggregate outcomes per cell") {
    random_sweep_options opt;
    opt.leaves = {2, 4};
    opt.vars = {4};
    opt.connectivity = {0.5};
    opt.seeds = 2;
    auto report = run_random_sweep(opt);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.total.found + report.total.no_difference + report.total.missed ==
          2 * 2 * 2); // cells x seeds x top-level perturbations
    CHECK(report.all_recovered());
    auto again = run_random_sweep(opt);
    CHECK(report.to_json() == again.to_json());
    CHECK(report.to_table() == again.to_table());
}
