#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "btx/bt.hpp"
#include "btx/cf_search.hpp"

namespace btx {

/// The worked five-node example: a fallback over a (condition, action)
/// sequence and a recovery action, coupled to a four-variable state graph.
domain case_study_domain();

/// Makes the demo builtins (e.g. the recall domain's round counter)
/// resolvable from tree definition files. Idempotent.
void register_demo_builtins();

/// The simplified serial-recall exercise: a robot presents a sequence, checks
/// the user's attention, evaluates the response and reacts socially. User
/// dimensions drive derived confusion/engagement/accuracy/response time.
domain serial_recall_domain();
/// Named perturbation profiles for the serial-recall user, keyed by profile
/// name ("default", "frustrated", "no_attention", "no_reactivity",
/// "no_memory").
assignment serial_recall_profile(const std::string& name, std::uint64_t seed);

struct random_domain_spec {
    int num_leaves = 2;
    int num_state_vars = 4;
    double connectivity = 0.5;
    std::uint64_t seed = 0;
};

/// Seeded random tree: exactly `num_leaves` leaves, every composite with two
/// or more children, uniform sequence/fallback kinds, rule-table behaviours
/// coherent with randomly drawn input/output/action sets.
bt_tree random_bt(const random_domain_spec& spec, const state_model& sm);

/// Seeded random boolean state graph: half the variables top-level, edge
/// density scaled by the connectivity parameter, derived variables random
/// and/or compositions of their parents.
state_model random_state_graph(const random_domain_spec& spec);

/// Tree, state graph and a random default initialisation in one bundle.
domain random_domain(const random_domain_spec& spec);

struct recovery_outcome {
    enum class kind { no_difference, recovered, missed };
    kind k = kind::no_difference;
    std::optional<query> q;
    std::vector<explanation> explanations;
    int model_nodes = 0;
};

/// Perturbs one top-level variable, runs default and altered executions for
/// one tick each, queries the first divergence in the altered run's context
/// and checks whether the perturbed variable shows up among the reasons.
recovery_outcome target_recovery(const domain& d, const expl_model& m,
                                 const assignment& default_init,
                                 const std::string& perturbed_variable, const value& perturbed_value,
                                 int d_max, int bins);

struct sweep_stats {
    std::int64_t found = 0;
    std::int64_t no_difference = 0;
    std::int64_t missed = 0;
    std::vector<int> model_nodes;
    std::vector<int> explanation_counts;

    double rate() const { return found + missed == 0 ? 1.0 : double(found) / double(found + missed); }
};

struct random_sweep_options {
    std::vector<int> leaves = {2, 4, 8};
    std::vector<int> vars = {4, 8, 12};
    std::vector<double> connectivity = {0.0, 0.5, 1.0};
    int seeds = 3;
    int d_max = 3;
    int bins = 10;
};

struct sweep_row {
    std::string label;
    int leaves = 0;
    int vars = 0;
    sweep_stats stats;
};

struct sweep_report {
    std::vector<sweep_row> rows;
    sweep_stats total;

    bool all_recovered() const { return total.missed == 0; }
    nlohmann::json to_json() const;
    std::string to_table() const;
};

sweep_report run_random_sweep(const random_sweep_options& opt);

struct recall_sweep_options {
    std::vector<std::string> profiles = {"frustrated", "no_attention", "no_reactivity",
                                         "no_memory"};
    int seeds = 10;
    int d_max = 3;
    int bins = 10;
};

sweep_report run_recall_sweep(const recall_sweep_options& opt);

} // namespace btx
