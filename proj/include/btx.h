/* C interface to the behaviour-tree explanation engine.
 *
 * All handles are opaque; destroy them with the matching *_free function.
 * Functions that return a pointer return NULL on failure; functions that
 * return btx_rc return BTX_OK (0) on success. btx_last_error() describes the
 * most recent failure on the calling thread. Strings returned as char* are
 * heap-allocated JSON or plain text; release them with btx_string_free.
 */
#ifndef BTX_H
#define BTX_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct btx_domain btx_domain; /* tree + state model + behaviours */
typedef struct btx_trace btx_trace;   /* episodic memory of one execution */
typedef struct btx_model btx_model;   /* compiled explanation model */
typedef struct btx_result btx_result; /* explanation set for one query */

typedef enum btx_rc {
    BTX_OK = 0,
    BTX_ERR_INVALID_ARGUMENT = 1,
    BTX_ERR_PARSE = 2,
    BTX_ERR_VALIDATION = 3,
    BTX_ERR_RANGE = 4,
    BTX_ERR_UNKNOWN_NAME = 5,
    BTX_ERR_OUT_OF_RANGE = 6,
    BTX_ERR_INVALID_QUERY = 7,
    BTX_ERR_NO_EXPLANATION = 8,
    BTX_ERR_NO_PREVIOUS_TICK = 9,
    BTX_ERR_IO = 10,
    BTX_ERR_INTERNAL = 11
} btx_rc;

/* Message and code for the last failed call on this thread. */
const char* btx_last_error(void);
btx_rc btx_last_rc(void);

void btx_string_free(char* s);

/* ---- domains ---------------------------------------------------------- */

/* Load a domain from JSON text: a tree definition and a state-model
 * definition. init_json may be NULL or a JSON object assigning top-level
 * variables; it becomes the domain's default initialisation. */
btx_domain* btx_domain_parse(const char* tree_json, const char* model_json,
                             const char* init_json);
/* Same, reading the two files (and optionally an init file). */
btx_domain* btx_domain_load(const char* tree_path, const char* model_path,
                            const char* init_path);
/* Built-in demo domains: "case_study" or "serial_recall". */
btx_domain* btx_domain_builtin(const char* name);
void btx_domain_free(btx_domain* d);

char* btx_domain_tree_json(const btx_domain* d);
char* btx_domain_model_json(const btx_domain* d);
char* btx_domain_default_init_json(const btx_domain* d);

/* ---- execution and traces --------------------------------------------- */

/* Run `ticks` ticks from the given top-level assignment (NULL: the domain's
 * default). Returns the recorded trace. */
btx_trace* btx_run(const btx_domain* d, const char* init_json, int ticks);
btx_rc btx_trace_save(const btx_trace* t, const char* path);
btx_trace* btx_trace_parse(const char* jsonl);
btx_trace* btx_trace_load(const char* path);
void btx_trace_free(btx_trace* t);

/* Line-delimited JSON: header line, then one event per line. */
char* btx_trace_jsonl(const btx_trace* t);
/* Summary: event count, tick count, per-tick root status. */
char* btx_trace_summary_json(const btx_trace* t);

/* ---- explanation model ------------------------------------------------- */

btx_model* btx_model_build(const btx_domain* d);
void btx_model_free(btx_model* m);
char* btx_model_graph_json(const btx_model* m);
char* btx_model_dot(const btx_model* m);

/* ---- queries ----------------------------------------------------------- */

/* query_json: {"targets": ["r.L0"], "facts": ["Failure"],
 *              "foils": [["Success"]], "time": 1, "time_kind": "event"}.
 * time_kind is "event" (global index, default), "node" (n-th node result)
 * or "leaf" (n-th leaf result). Returns the explanation set. */
btx_result* btx_explain(const btx_model* m, const btx_trace* t, const char* query_json,
                        int d_max, int bins);
void btx_result_free(btx_result* r);
char* btx_result_json(const btx_result* r);

/* Construct the follow-up query for one reason of one explanation
 * (0-based indices). Returns query JSON ready for btx_explain. */
char* btx_follow_up(const btx_model* m, const btx_trace* t, const btx_result* r,
                    int explanation_index, int reason_index);

/* ---- evaluation sweeps -------------------------------------------------- */

/* options_json (all fields optional):
 *   {"leaves": [2,4,8], "vars": [4,8,12], "connectivity": [0,0.5,1],
 *    "seeds": 3, "d_max": 3, "bins": 10}
 * Report JSON mirrors the per-cell recovery/model-size table. */
char* btx_eval_random(const char* options_json);
/* options_json: {"profiles": ["frustrated", ...], "seeds": 10, ...} */
char* btx_eval_recall(const char* options_json);

#ifdef __cplusplus
}
#endif

#endif /* BTX_H */
