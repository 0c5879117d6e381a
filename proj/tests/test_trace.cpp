#include <doctest.h>

#include <sstream>

#include "btx/domains.hpp"
#include "btx/executor.hpp"
#include "btx/trace.hpp"

using namespace btx;

TEST_CASE("append keeps the log gap-free") {
    episodic_memory mem;
    mem.initial = {{"x", value(false)}};
    CHECK(mem.length() == 1); // the initial snapshot occupies index 0

    mem.append(event::node_result(1, "L0", status::failure));
    CHECK(mem.length() == 2);
    CHECK(mem.last_index() == 1);

    SUBCASE("wrong index is rejected") {
        CHECK_THROWS_AS(mem.append(event::node_result(5, "L1", status::success)), error);
        CHECK_THROWS_AS(mem.append(event::node_result(1, "L1", status::success)), error);
        CHECK(mem.length() == 2);
    }
    SUBCASE("Invalid results are not loggable") {
        CHECK_THROWS_AS(mem.append(event::node_result(2, "L1", status::invalid)), error);
    }
}

TEST_CASE("one recovery-branch tick logs the expected events") {
    domain d = case_study_domain();
    episodic_memory mem;
    run(d, {{"Xa", value(false)}, {"Xb", value(false)}}, 1, mem);
    // L0, seq, L2 and sel results, L2's writes (Xb plus derived Xd), boundary
    REQUIRE(mem.last_index() == 7);
    CHECK(mem.at(1).node_id == "L0");
    CHECK(mem.at(2).node_id == "seq");
    CHECK(mem.at(3).variable == "Xb");
    CHECK(mem.at(4).variable == "Xd");
    CHECK(mem.at(5).node_id == "L2");
    CHECK(mem.at(6).node_id == "sel");
    CHECK(mem.at(7).k == event::kind::tick_boundary);
}

TEST_CASE("slice_until replays state and statuses up to a time") {
    domain d = case_study_domain();
    episodic_memory mem;
    run(d, {{"Xa", value(false)}, {"Xb", value(false)}}, 2, mem);

    SUBCASE("time zero is the initial snapshot") {
        auto s = mem.slice_until(0);
        CHECK(s.state == mem.initial);
        CHECK(s.node_status.empty());
        CHECK(s.ticks_completed == 0);
    }
    SUBCASE("at the first result only L0 is resolved") {
        auto s = mem.slice_until(1);
        CHECK(s.node_status.at("L0") == status::failure);
        CHECK(s.node_status.count("L1") == 0); // unexecuted nodes stay unreported
        CHECK(s.node_status.count("L2") == 0);
        CHECK(s.state.at("Xd") == value(true));
    }
    SUBCASE("tick boundaries reset statuses and carry state") {
        // tick 1 sets Xb; the first event of tick 2 sees it as initial value
        std::int64_t boundary = mem.tick_end_index(1);
        auto s = mem.slice_until(boundary + 1);
        CHECK(s.state.at("Xb") == value(true));
        CHECK(s.ticks_completed == 1);
        CHECK(s.node_status.size() == 1); // only the first node of tick 2
    }
    SUBCASE("out of range is rejected") {
        CHECK_THROWS_AS((void)mem.slice_until(mem.last_index() + 1), error);
        CHECK_THROWS_AS((void)mem.slice_until(-1), error);
    }
}

TEST_CASE("traces round-trip through the line format") {
    domain d = case_study_domain();
    episodic_memory mem;
    run(d, d.default_init, 2, mem);
    auto text = mem.to_jsonl();
    auto back = episodic_memory::from_jsonl(text);
    CHECK(back.to_jsonl() == text);
    CHECK(back.initial == mem.initial);
    CHECK(back.last_index() == mem.last_index());
}

TEST_CASE("replaying the log reproduces the executor's final state") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        random_domain_spec spec;
        spec.num_leaves = 4;
        spec.num_state_vars = 6;
        spec.connectivity = 0.5;
        spec.seed = seed;
        domain d = random_domain(spec);

        episodic_memory mem;
        assignment state = d.model->propagate(d.default_init);
        mem.initial = state;
        run_tick(*d.tree, *d.model, state, mem);
        run_tick(*d.tree, *d.model, state, mem);

        CHECK(mem.slice_until(mem.last_index()).state == state);
    }
}

TEST_CASE("node-time and leaf-time map onto global indices") {
    domain d = case_study_domain();
    episodic_memory mem;
    run(d, {{"Xa", value(false)}, {"Xb", value(false)}}, 1, mem);
    // results sit at 1 (L0), 2 (seq), 5 (L2), 6 (sel)
    CHECK(mem.index_of_node_time(0) == 0);
    CHECK(mem.index_of_node_time(1) == 1);
    CHECK(mem.index_of_node_time(2) == 2);
    CHECK(mem.index_of_node_time(3) == 5);
    CHECK(mem.index_of_node_time(4) == 6);
    CHECK_THROWS_AS((void)mem.index_of_node_time(5), error);
    CHECK(mem.node_time_of(5) == 3);

    std::vector<std::string> leaf_ids{"L0", "L1", "L2"};
    CHECK(mem.index_of_leaf_time(1, leaf_ids) == 1);
    CHECK(mem.index_of_leaf_time(2, leaf_ids) == 5);
    CHECK_THROWS_AS((void)mem.index_of_leaf_time(3, leaf_ids), error);
}
