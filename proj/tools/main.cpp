// Command-line front end. Everything goes through the shared C API; this
// translation unit never touches the C++ core directly.
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "btx.h"

namespace {

using nlohmann::json;

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_no_explanation = 2;
constexpr int exit_missed = 3;

struct string_deleter {
    void operator()(char* s) const { btx_string_free(s); }
};
using api_string = std::unique_ptr<char, string_deleter>;

struct domain_deleter {
    void operator()(btx_domain* d) const { btx_domain_free(d); }
};
struct trace_deleter {
    void operator()(btx_trace* t) const { btx_trace_free(t); }
};
struct model_deleter {
    void operator()(btx_model* m) const { btx_model_free(m); }
};
struct result_deleter {
    void operator()(btx_result* r) const { btx_result_free(r); }
};

using domain_ptr = std::unique_ptr<btx_domain, domain_deleter>;
using trace_ptr = std::unique_ptr<btx_trace, trace_deleter>;
using model_ptr = std::unique_ptr<btx_model, model_deleter>;
using result_ptr = std::unique_ptr<btx_result, result_deleter>;

[[noreturn]] void die(const std::string& msg, int code = exit_usage) {
    std::cerr << "error: " << msg << "\n";
    std::exit(code);
}

struct domain_options {
    std::string tree_path;
    std::string model_path;
    std::string init_path;
    std::string builtin;

    void attach(CLI::App* cmd) {
        cmd->add_option("--tree", tree_path, "behaviour tree definition (JSON)");
        cmd->add_option("--state", model_path, "state model definition (JSON)");
        cmd->add_option("--init", init_path, "initial top-level assignment (JSON)");
        cmd->add_option("--builtin", builtin, "built-in demo domain (case_study, serial_recall)");
    }

    domain_ptr open() const {
        if (!builtin.empty()) {
            if (!tree_path.empty() || !model_path.empty())
                die("--builtin excludes --tree/--state");
            domain_ptr d(btx_domain_builtin(builtin.c_str()));
            if (!d) die(btx_last_error());
            return d;
        }
        if (tree_path.empty() || model_path.empty())
            die("either --builtin or both --tree and --state are required");
        domain_ptr d(btx_domain_load(tree_path.c_str(), model_path.c_str(),
                                     init_path.empty() ? nullptr : init_path.c_str()));
        if (!d) die(btx_last_error());
        return d;
    }
};

json parse_scalar(const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    try {
        size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos == s.size()) return v;
    } catch (const std::exception&) {
    }
    return s;
}

json parse_foil_token(const std::string& s) {
    auto colon = s.find(':');
    if (colon != std::string::npos) {
        try {
            return json{{"lo", std::stod(s.substr(0, colon))},
                        {"hi", std::stod(s.substr(colon + 1))}};
        } catch (const std::exception&) {
        }
    }
    return parse_scalar(s);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, sep))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

void print_result(const json& r, bool as_json) {
    if (as_json) {
        std::cout << r.dump(2) << "\n";
        return;
    }
    const auto& q = r.at("query");
    std::cout << "query: why " << q.at("targets").dump() << " = " << q.at("facts").dump()
              << " rather than " << q.at("foils").dump() << " at time " << q.at("time").get<long>()
              << " (node " << r.at("node_time").get<long>() << ", leaf "
              << r.at("leaf_time").get<long>() << ", tick " << r.at("tick").get<long>() << ")\n";
    std::cout << "depth " << r.at("depth").get<int>() << ", " << r.at("candidates_tested").get<long>()
              << " candidates over " << r.at("searchable_variables").get<int>() << " variables\n";
    int i = 1;
    for (const auto& e : r.at("explanations")) {
        std::cout << "  [" << i++ << "] because ";
        bool first = true;
        for (const auto& reason : e.at("reasons")) {
            if (!first) std::cout << " and ";
            first = false;
            std::cout << reason.at("var").get<std::string>() << " = "
                      << reason.at("value").dump();
        }
        std::cout << "\n      if instead ";
        first = true;
        for (const auto& j : e.at("counterfactual").at("if")) {
            if (!first) std::cout << " and ";
            first = false;
            std::cout << j.at("var").get<std::string>() << " = " << j.at("value").dump();
        }
        std::cout << " then ";
        first = true;
        for (const auto& k : e.at("counterfactual").at("then")) {
            if (!first) std::cout << " and ";
            first = false;
            std::cout << k.at("var").get<std::string>() << " = " << k.at("value").dump();
        }
        std::cout << "\n";
    }
}

int rc_to_exit() {
    return btx_last_rc() == BTX_ERR_NO_EXPLANATION ? exit_no_explanation : exit_usage;
}

int cmd_run(const domain_options& dom, const std::vector<std::string>& sets, int ticks,
            const std::string& out_path, long seed, bool as_json) {
    domain_ptr d = dom.open();
    json overrides = json::object();
    if (seed >= 0) {
        api_string model_json(btx_domain_model_json(d.get()));
        if (model_json && std::string(model_json.get()).find("noise_seed") != std::string::npos)
            overrides["noise_seed"] = double(seed % 10007) / 10007.0;
    }
    for (const auto& s : sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) die("--set expects NAME=VALUE, got '" + s + "'");
        overrides[s.substr(0, eq)] = parse_scalar(s.substr(eq + 1));
    }
    trace_ptr t(btx_run(d.get(), overrides.empty() ? nullptr : overrides.dump().c_str(), ticks));
    if (!t) die(btx_last_error());
    if (!out_path.empty() && btx_trace_save(t.get(), out_path.c_str()) != BTX_OK)
        die(btx_last_error());
    api_string summary(btx_trace_summary_json(t.get()));
    if (!summary) die(btx_last_error());
    if (as_json) {
        std::cout << summary.get() << "\n";
    } else {
        json s = json::parse(summary.get());
        int tick = 1;
        for (const auto& st : s.at("root_status"))
            std::cout << "tick " << tick++ << ": " << st.get<std::string>() << "\n";
        std::cout << s.at("events").get<long>() << " events";
        if (!out_path.empty()) std::cout << " -> " << out_path;
        std::cout << "\n";
    }
    return exit_ok;
}

int cmd_build_graph(const domain_options& dom, const std::string& out_path,
                    const std::string& dot_path) {
    domain_ptr d = dom.open();
    model_ptr m(btx_model_build(d.get()));
    if (!m) die(btx_last_error());
    api_string graph(btx_model_graph_json(m.get()));
    if (!graph) die(btx_last_error());
    if (out_path.empty()) {
        std::cout << graph.get() << "\n";
    } else {
        FILE* f = std::fopen(out_path.c_str(), "w");
        if (!f) die("cannot write " + out_path);
        std::fputs(graph.get(), f);
        std::fclose(f);
    }
    if (!dot_path.empty()) {
        api_string dot(btx_model_dot(m.get()));
        if (!dot) die(btx_last_error());
        FILE* f = std::fopen(dot_path.c_str(), "w");
        if (!f) die("cannot write " + dot_path);
        std::fputs(dot.get(), f);
        std::fclose(f);
    }
    return exit_ok;
}

json build_query_json(const std::string& var, const std::string& fact, const std::string& foil,
                      long time, const std::string& time_kind) {
    json q;
    q["targets"] = json::array({var});
    q["facts"] = json::array({parse_scalar(fact)});
    json foils = json::array();
    for (const auto& tok : split(foil, ',')) foils.push_back(parse_foil_token(tok));
    q["foils"] = json::array({foils});
    q["time"] = time;
    q["time_kind"] = time_kind;
    return q;
}

int cmd_explain(const domain_options& dom, const std::string& trace_path,
                const std::string& query_path, const std::string& var, const std::string& fact,
                const std::string& foil, long time, const std::string& time_kind, int dmax,
                int bins, bool as_json) {
    domain_ptr d = dom.open();
    trace_ptr t(btx_trace_load(trace_path.c_str()));
    if (!t) die(btx_last_error());
    model_ptr m(btx_model_build(d.get()));
    if (!m) die(btx_last_error());

    json q;
    if (!query_path.empty()) {
        FILE* f = std::fopen(query_path.c_str(), "r");
        if (!f) die("cannot open " + query_path);
        std::string text;
        char buf[4096];
        size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
        std::fclose(f);
        q = json::parse(text);
    } else {
        if (var.empty() || fact.empty() || foil.empty())
            die("explain needs --query or --var/--fact/--foil/--time");
        q = build_query_json(var, fact, foil, time, time_kind);
    }
    result_ptr r(btx_explain(m.get(), t.get(), q.dump().c_str(), dmax, bins));
    if (!r) {
        std::cerr << "error: " << btx_last_error() << "\n";
        return rc_to_exit();
    }
    api_string out(btx_result_json(r.get()));
    if (!out) die(btx_last_error());
    print_result(json::parse(out.get()), as_json);
    return exit_ok;
}

int cmd_repl(const domain_options& dom, const std::string& trace_path, int dmax, int bins) {
    domain_ptr d = dom.open();
    trace_ptr t(btx_trace_load(trace_path.c_str()));
    if (!t) die(btx_last_error());
    model_ptr m(btx_model_build(d.get()));
    if (!m) die(btx_last_error());

    std::cout << "interactive explanations. commands:\n"
              << "  why <var> <fact> <foil[,foil]> at <time> [event|node|leaf]\n"
              << "  followup <explanation#> <reason#>\n"
              << "  show | help | quit\n";
    result_ptr last;
    json last_json;
    std::string line;
    while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
        auto words = split(line, ' ');
        if (words.empty()) continue;
        const std::string& cmd = words[0];
        if (cmd == "quit" || cmd == "exit") break;
        if (cmd == "help") {
            std::cout << "  why <var> <fact> <foil[,foil]> at <time> [event|node|leaf]\n"
                      << "  followup <explanation#> <reason#>\n  show | quit\n";
            continue;
        }
        if (cmd == "show") {
            if (last)
                print_result(last_json, false);
            else
                std::cout << "nothing asked yet\n";
            continue;
        }
        try {
            json q;
            if (cmd == "why") {
                if (words.size() < 6 || words[4] != "at") {
                    std::cout << "usage: why <var> <fact> <foil[,foil]> at <time> [kind]\n";
                    continue;
                }
                std::string kind = words.size() > 6 ? words[6] : "event";
                q = build_query_json(words[1], words[2], words[3], std::stol(words[5]), kind);
            } else if (cmd == "followup") {
                if (!last) {
                    std::cout << "no previous explanation to follow up on\n";
                    continue;
                }
                if (words.size() != 3) {
                    std::cout << "usage: followup <explanation#> <reason#>\n";
                    continue;
                }
                api_string fq(btx_follow_up(m.get(), t.get(), last.get(),
                                            std::stoi(words[1]) - 1, std::stoi(words[2]) - 1));
                if (!fq) {
                    std::cout << "cannot follow up: " << btx_last_error() << "\n";
                    continue;
                }
                q = json::parse(fq.get());
                std::cout << "following up: why " << q.at("targets").dump() << " = "
                          << q.at("facts").dump() << " rather than " << q.at("foils").dump()
                          << " at time " << q.at("time").get<long>() << "\n";
            } else {
                std::cout << "unknown command '" << cmd << "' (try help)\n";
                continue;
            }
            result_ptr r(btx_explain(m.get(), t.get(), q.dump().c_str(), dmax, bins));
            if (!r) {
                std::cout << "no luck: " << btx_last_error() << "\n";
                continue;
            }
            api_string out(btx_result_json(r.get()));
            last_json = json::parse(out.get());
            last = std::move(r);
            print_result(last_json, false);
        } catch (const std::exception& e) {
            std::cout << "bad input: " << e.what() << "\n";
        }
    }
    return exit_ok;
}

int cmd_eval(const std::string& kind, const std::string& leaves, const std::string& vars,
             const std::string& conn, const std::string& profiles, int seeds, bool full_sweep,
             int dmax, int bins, bool as_json) {
    json opt;
    if (dmax > 0) opt["d_max"] = dmax;
    if (bins > 0) opt["bins"] = bins;
    api_string report;
    if (kind == "random") {
        if (full_sweep) {
            opt["leaves"] = {2, 4, 8};
            opt["vars"] = {4, 8, 12};
            opt["connectivity"] = {0.0, 0.25, 0.5, 0.75, 1.0};
            opt["seeds"] = 10;
        }
        if (!leaves.empty()) {
            opt["leaves"] = json::array();
            for (const auto& s : split(leaves, ',')) opt["leaves"].push_back(std::stoi(s));
        }
        if (!vars.empty()) {
            opt["vars"] = json::array();
            for (const auto& s : split(vars, ',')) opt["vars"].push_back(std::stoi(s));
        }
        if (!conn.empty()) {
            opt["connectivity"] = json::array();
            for (const auto& s : split(conn, ',')) opt["connectivity"].push_back(std::stod(s));
        }
        if (seeds > 0) opt["seeds"] = seeds;
        report.reset(btx_eval_random(opt.dump().c_str()));
    } else if (kind == "recall") {
        if (!profiles.empty()) {
            opt["profiles"] = json::array();
            for (const auto& s : split(profiles, ',')) opt["profiles"].push_back(s);
        }
        if (seeds > 0) opt["seeds"] = seeds;
        report.reset(btx_eval_recall(opt.dump().c_str()));
    } else {
        die("eval kind must be 'random' or 'recall'");
    }
    if (!report) die(btx_last_error());
    json r = json::parse(report.get());
    if (as_json) {
        std::cout << r.dump(2) << "\n";
    } else {
        for (const auto& row : r.at("rows")) {
            std::cout << row.at("label").get<std::string>() << ": found "
                      << row.at("target_found").get<long>() << ", no-difference "
                      << row.at("no_difference").get<long>() << ", missed "
                      << row.at("missed").get<long>() << ", rate "
                      << row.at("recovery_rate").get<double>() << ", model nodes mean "
                      << row.at("model_nodes").at("mean").get<double>() << "\n";
        }
        std::cout << "overall recovery rate: " << r.at("recovery_rate").get<double>() << "\n";
    }
    return r.at("all").at("missed").get<long>() == 0 ? exit_ok : exit_missed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"behaviour-tree execution, causal explanation models and counterfactual queries"};
    app.require_subcommand(1);

    long seed = -1;
    int dmax = 3, bins = 10;
    bool as_json = false, full_sweep = false;
    app.add_option("--seed", seed, "seed folded into domains that declare noise");
    app.add_option("--dmax", dmax, "maximum counterfactual search depth")->capture_default_str();
    app.add_option("--bins", bins, "discretisation bins for continuous ranges")
        ->capture_default_str();
    app.add_flag("--json", as_json, "machine-readable output");
    app.add_flag("--full-sweep", full_sweep, "run the full-size evaluation sweep");

    domain_options run_dom, graph_dom, explain_dom, repl_dom;
    std::vector<std::string> run_sets;
    int run_ticks = 1;
    std::string run_out;

    auto* run_cmd = app.add_subcommand("run", "execute ticks and record a trace");
    run_dom.attach(run_cmd);
    run_cmd->add_option("--set", run_sets, "override an initial value (NAME=VALUE)");
    run_cmd->add_option("--ticks", run_ticks, "number of ticks")->capture_default_str();
    run_cmd->add_option("--out", run_out, "trace output path");

    std::string graph_out, graph_dot;
    auto* graph_cmd = app.add_subcommand("build-graph", "compile and export the explanation model");
    graph_dom.attach(graph_cmd);
    graph_cmd->add_option("--out", graph_out, "graph JSON output path (default: stdout)");
    graph_cmd->add_option("--dot", graph_dot, "also write a DOT rendering");

    std::string ex_trace, ex_query, ex_var, ex_fact, ex_foil, ex_kind = "event";
    long ex_time = 0;
    auto* explain_cmd = app.add_subcommand("explain", "answer a why(fact, foil) query");
    explain_dom.attach(explain_cmd);
    explain_cmd->add_option("--trace", ex_trace, "recorded trace")->required();
    explain_cmd->add_option("--query", ex_query, "query JSON file");
    explain_cmd->add_option("--var", ex_var, "variable selector (E.id, r.id, d.id, name.version)");
    explain_cmd->add_option("--fact", ex_fact, "recorded value");
    explain_cmd->add_option("--foil", ex_foil, "comma-separated foil values (or lo:hi)");
    explain_cmd->add_option("--time", ex_time, "query time");
    explain_cmd->add_option("--time-kind", ex_kind, "event, node or leaf")->capture_default_str();

    std::string repl_trace;
    auto* repl_cmd = app.add_subcommand("repl", "interactive query loop with follow-ups");
    repl_dom.attach(repl_cmd);
    repl_cmd->add_option("--trace", repl_trace, "recorded trace")->required();

    std::string ev_kind, ev_leaves, ev_vars, ev_conn, ev_profiles;
    int ev_seeds = 0;
    auto* eval_cmd = app.add_subcommand("eval", "run the recovery evaluation sweeps");
    eval_cmd->add_option("kind", ev_kind, "random or recall")->required();
    eval_cmd->add_option("--leaves", ev_leaves, "comma-separated leaf counts");
    eval_cmd->add_option("--vars", ev_vars, "comma-separated state-variable counts");
    eval_cmd->add_option("--connectivity", ev_conn, "comma-separated connectivity values");
    eval_cmd->add_option("--profiles", ev_profiles, "comma-separated recall profiles");
    eval_cmd->add_option("--seeds", ev_seeds, "seeds per cell");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed())
            return cmd_run(run_dom, run_sets, run_ticks, run_out, seed, as_json);
        if (graph_cmd->parsed()) return cmd_build_graph(graph_dom, graph_out, graph_dot);
        if (explain_cmd->parsed())
            return cmd_explain(explain_dom, ex_trace, ex_query, ex_var, ex_fact, ex_foil, ex_time,
                               ex_kind, dmax, bins, as_json);
        if (repl_cmd->parsed()) return cmd_repl(repl_dom, repl_trace, dmax, bins);
        if (eval_cmd->parsed())
            return cmd_eval(ev_kind, ev_leaves, ev_vars, ev_conn, ev_profiles, ev_seeds,
                            full_sweep, dmax, bins, as_json);
    } catch (const std::exception& e) {
        die(e.what());
    }
    return exit_usage;
}
