#include "btx.h"

#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "btx/cf_search.hpp"
#include "btx/domains.hpp"
#include "btx/executor.hpp"

using namespace btx;

struct btx_domain {
    domain d;
};

struct btx_trace {
    episodic_memory mem;
};

struct btx_model {
    expl_model m;
};

struct btx_result {
    search_result res;
    std::string rendered; // result JSON, rendered against the model at creation
};

namespace {

thread_local std::string g_last_error = "no error";
thread_local btx_rc g_last_rc = BTX_OK;

btx_rc rc_of(errc c) {
    switch (c) {
        case errc::parse: return BTX_ERR_PARSE;
        case errc::validation: return BTX_ERR_VALIDATION;
        case errc::range_violation: return BTX_ERR_RANGE;
        case errc::missing_variable:
        case errc::unknown_node:
        case errc::unknown_variable: return BTX_ERR_UNKNOWN_NAME;
        case errc::index_mismatch:
        case errc::out_of_range: return BTX_ERR_OUT_OF_RANGE;
        case errc::missing_parent_value: return BTX_ERR_INTERNAL;
        case errc::invalid_query: return BTX_ERR_INVALID_QUERY;
        case errc::no_explanation_found: return BTX_ERR_NO_EXPLANATION;
        case errc::no_previous_tick: return BTX_ERR_NO_PREVIOUS_TICK;
        case errc::io: return BTX_ERR_IO;
    }
    return BTX_ERR_INTERNAL;
}

template <typename F>
auto guarded(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const error& e) {
        g_last_error = e.what();
        g_last_rc = rc_of(e.code());
    } catch (const nlohmann::json::exception& e) {
        g_last_error = e.what();
        g_last_rc = BTX_ERR_PARSE;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        g_last_rc = BTX_ERR_INTERNAL;
    }
    return decltype(f()){};
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string read_file(const char* path) {
    std::ifstream is(path);
    if (!is) fail(errc::io, std::string("cannot open '") + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

const char* require(const char* p, const char* what) {
    if (!p) fail(errc::validation, std::string(what) + " must not be NULL");
    return p;
}

template <typename T>
const T* require_ptr(const T* p, const char* what) {
    if (!p) fail(errc::validation, std::string(what) + " must not be NULL");
    return p;
}

} // namespace

extern "C" {

const char* btx_last_error(void) { return g_last_error.c_str(); }

btx_rc btx_last_rc(void) { return g_last_rc; }

void btx_string_free(char* s) { std::free(s); }

btx_domain* btx_domain_parse(const char* tree_json, const char* model_json,
                             const char* init_json) {
    return guarded([&]() -> btx_domain* {
        auto tree = nlohmann::json::parse(require(tree_json, "tree_json"));
        auto model = nlohmann::json::parse(require(model_json, "model_json"));
        assignment init;
        if (init_json) init = assignment_from_json(nlohmann::json::parse(init_json));
        auto* d = new btx_domain{domain::load(tree, model, init, "domain")};
        return d;
    });
}

btx_domain* btx_domain_load(const char* tree_path, const char* model_path,
                            const char* init_path) {
    return guarded([&]() -> btx_domain* {
        register_demo_builtins();
        auto tree = nlohmann::json::parse(read_file(require(tree_path, "tree_path")));
        auto model = nlohmann::json::parse(read_file(require(model_path, "model_path")));
        assignment init;
        if (init_path) init = assignment_from_json(nlohmann::json::parse(read_file(init_path)));
        return new btx_domain{domain::load(tree, model, init, tree_path)};
    });
}

btx_domain* btx_domain_builtin(const char* name) {
    return guarded([&]() -> btx_domain* {
        const std::string n = require(name, "name");
        if (n == "case_study") return new btx_domain{case_study_domain()};
        if (n == "serial_recall") return new btx_domain{serial_recall_domain()};
        fail(errc::validation, "unknown builtin domain '" + n + "'");
    });
}

void btx_domain_free(btx_domain* d) { delete d; }

char* btx_domain_tree_json(const btx_domain* d) {
    return guarded([&]() -> char* {
        require_ptr(d, "domain");
        return dup_string(d->d.tree->to_json().dump(2));
    });
}

char* btx_domain_model_json(const btx_domain* d) {
    return guarded([&]() -> char* {
        require_ptr(d, "domain");
        return dup_string(d->d.model->to_json().dump(2));
    });
}

char* btx_domain_default_init_json(const btx_domain* d) {
    return guarded([&]() -> char* {
        require_ptr(d, "domain");
        return dup_string(assignment_to_json(d->d.default_init).dump(2));
    });
}

btx_trace* btx_run(const btx_domain* d, const char* init_json, int ticks) {
    return guarded([&]() -> btx_trace* {
        require_ptr(d, "domain");
        if (ticks < 0) fail(errc::validation, "ticks must be non-negative");
        assignment init = d->d.default_init;
        if (init_json) {
            for (const auto& [k, v] :
                 assignment_from_json(nlohmann::json::parse(init_json)))
                init[k] = v;
        }
        auto* t = new btx_trace{};
        run(d->d, init, ticks, t->mem);
        return t;
    });
}

btx_rc btx_trace_save(const btx_trace* t, const char* path) {
    bool ok = guarded([&]() -> bool {
        require_ptr(t, "trace");
        std::ofstream os(require(path, "path"));
        if (!os) fail(errc::io, std::string("cannot write '") + path + "'");
        t->mem.save(os);
        return true;
    });
    return ok ? BTX_OK : g_last_rc;
}

btx_trace* btx_trace_parse(const char* jsonl) {
    return guarded([&]() -> btx_trace* {
        return new btx_trace{episodic_memory::from_jsonl(require(jsonl, "jsonl"))};
    });
}

btx_trace* btx_trace_load(const char* path) {
    return guarded([&]() -> btx_trace* {
        std::ifstream is(require(path, "path"));
        if (!is) fail(errc::io, std::string("cannot open '") + path + "'");
        return new btx_trace{episodic_memory::load(is)};
    });
}

void btx_trace_free(btx_trace* t) { delete t; }

char* btx_trace_jsonl(const btx_trace* t) {
    return guarded([&]() -> char* {
        require_ptr(t, "trace");
        return dup_string(t->mem.to_jsonl());
    });
}

char* btx_trace_summary_json(const btx_trace* t) {
    return guarded([&]() -> char* {
        require_ptr(t, "trace");
        nlohmann::json out;
        out["events"] = t->mem.last_index();
        std::int64_t ticks = 0;
        auto roots = nlohmann::json::array();
        std::string root_id;
        status last = status::invalid;
        for (const auto& e : t->mem.events()) {
            if (e.k == event::kind::node_result) last = e.st;
            if (e.k == event::kind::tick_boundary) {
                ticks = e.tick;
                roots.push_back(to_string(last));
            }
        }
        out["ticks"] = ticks;
        out["root_status"] = roots;
        return dup_string(out.dump(2));
    });
}

btx_model* btx_model_build(const btx_domain* d) {
    return guarded([&]() -> btx_model* {
        require_ptr(d, "domain");
        return new btx_model{expl_model::build(d->d.tree, d->d.model)};
    });
}

void btx_model_free(btx_model* m) { delete m; }

char* btx_model_graph_json(const btx_model* m) {
    return guarded([&]() -> char* {
        require_ptr(m, "model");
        return dup_string(m->m.graph_json().dump(2));
    });
}

char* btx_model_dot(const btx_model* m) {
    return guarded([&]() -> char* {
        require_ptr(m, "model");
        return dup_string(m->m.to_dot());
    });
}

btx_result* btx_explain(const btx_model* m, const btx_trace* t, const char* query_json,
                        int d_max, int bins) {
    return guarded([&]() -> btx_result* {
        require_ptr(m, "model");
        require_ptr(t, "trace");
        query q = query::from_json(nlohmann::json::parse(require(query_json, "query_json")),
                                   m->m, t->mem);
        auto* r = new btx_result{counterfactual_search(m->m, t->mem, q, d_max, bins), {}};
        r->rendered = result_to_json(m->m, r->res).dump(2);
        return r;
    });
}

void btx_result_free(btx_result* r) { delete r; }

char* btx_result_json(const btx_result* r) {
    return guarded([&]() -> char* {
        require_ptr(r, "result");
        return dup_string(r->rendered);
    });
}

char* btx_follow_up(const btx_model* m, const btx_trace* t, const btx_result* r,
                    int explanation_index, int reason_index) {
    return guarded([&]() -> char* {
        require_ptr(m, "model");
        require_ptr(t, "trace");
        require_ptr(r, "result");
        query fq = make_follow_up(m->m, t->mem, r->res, explanation_index, reason_index);
        return dup_string(fq.to_json(m->m).dump(2));
    });
}

char* btx_eval_random(const char* options_json) {
    return guarded([&]() -> char* {
        random_sweep_options opt;
        if (options_json) {
            auto j = nlohmann::json::parse(options_json);
            if (j.contains("leaves")) opt.leaves = j.at("leaves").get<std::vector<int>>();
            if (j.contains("vars")) opt.vars = j.at("vars").get<std::vector<int>>();
            if (j.contains("connectivity"))
                opt.connectivity = j.at("connectivity").get<std::vector<double>>();
            if (j.contains("seeds")) opt.seeds = j.at("seeds").get<int>();
            if (j.contains("d_max")) opt.d_max = j.at("d_max").get<int>();
            if (j.contains("bins")) opt.bins = j.at("bins").get<int>();
        }
        return dup_string(run_random_sweep(opt).to_json().dump(2));
    });
}

char* btx_eval_recall(const char* options_json) {
    return guarded([&]() -> char* {
        recall_sweep_options opt;
        if (options_json) {
            auto j = nlohmann::json::parse(options_json);
            if (j.contains("profiles"))
                opt.profiles = j.at("profiles").get<std::vector<std::string>>();
            if (j.contains("seeds")) opt.seeds = j.at("seeds").get<int>();
            if (j.contains("d_max")) opt.d_max = j.at("d_max").get<int>();
            if (j.contains("bins")) opt.bins = j.at("bins").get<int>();
        }
        return dup_string(run_recall_sweep(opt).to_json().dump(2));
    });
}

} // extern "C"
