#include "btx/domains.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

namespace btx {

void register_demo_builtins() {
    static bool done = false;
    if (done) return;
    done = true;
    behaviour_registry::instance().register_effect("advance_round", [](const assignment& in) {
        assignment out;
        out["round"] = value(std::min(in.at("round").as_number() + 1.0, 100.0));
        return out;
    });
}

// A robot runs one recall round per tick: set difficulty, make sure the user
// is paying attention, present the sequence, then react to the outcome.
// User dimensions feed derived confusion/engagement/response-time/accuracy
// variables; a seeded hash term adds per-round variation without breaking
// determinism.
domain serial_recall_domain() {
    register_demo_builtins();

    const auto model = nlohmann::json::parse(R"({
      "variables": [
        {"name": "attention",      "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "memory",         "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "reactivity",     "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "frustration",    "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "round",          "range": {"kind": "continuous", "lo": 0, "hi": 100}},
        {"name": "seq_len",        "range": {"kind": "continuous", "lo": 0, "hi": 10}},
        {"name": "seq_complexity", "range": {"kind": "continuous", "lo": 0, "hi": 10}},
        {"name": "task_over",      "range": "boolean"},
        {"name": "noise_seed",     "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "confusion",      "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "engagement",     "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "response_time",  "range": {"kind": "continuous", "lo": 0, "hi": 1}},
        {"name": "accuracy",       "range": {"kind": "continuous", "lo": 0, "hi": 1}}
      ],
      "edges": [
        ["seq_complexity", "confusion"], ["memory", "confusion"],
        ["attention", "confusion"], ["frustration", "confusion"],
        ["attention", "engagement"], ["confusion", "engagement"],
        ["frustration", "engagement"], ["reactivity", "engagement"],
        ["confusion", "response_time"], ["reactivity", "response_time"],
        ["noise_seed", "response_time"], ["round", "response_time"],
        ["memory", "accuracy"], ["confusion", "accuracy"], ["frustration", "accuracy"],
        ["noise_seed", "accuracy"], ["round", "accuracy"]
      ],
      "functions": {
        "confusion": {"op": "clamp01", "args": [{"op": "add", "args": [
            {"op": "mul", "args": [{"const": 0.1}, {"var": "seq_complexity"}]},
            {"op": "mul", "args": [{"const": 0.5}, {"op": "sub", "args": [{"const": 1}, {"var": "memory"}]}]},
            {"op": "mul", "args": [{"const": -0.3}, {"var": "attention"}]},
            {"op": "mul", "args": [{"const": 0.3}, {"var": "frustration"}]}
        ]}]},
        "engagement": {"op": "clamp01", "args": [{"op": "add", "args": [
            {"var": "attention"},
            {"op": "mul", "args": [{"const": -0.5}, {"var": "confusion"}]},
            {"op": "mul", "args": [{"const": -0.4}, {"var": "frustration"}]},
            {"op": "mul", "args": [{"const": 0.3}, {"var": "reactivity"}]}
        ]}]},
        "response_time": {"op": "clamp01", "args": [{"op": "add", "args": [
            {"const": 0.3},
            {"op": "mul", "args": [{"const": 0.4}, {"var": "confusion"}]},
            {"op": "mul", "args": [{"const": 0.4}, {"op": "sub", "args": [{"const": 1}, {"var": "reactivity"}]}]},
            {"op": "mul", "args": [{"const": 0.1}, {"op": "sub", "args": [
                {"op": "hash01", "args": [{"var": "noise_seed"}, {"var": "round"}]}, {"const": 0.5}]}]}
        ]}]},
        "accuracy": {"op": "clamp01", "args": [{"op": "add", "args": [
            {"op": "mul", "args": [{"var": "memory"},
                {"op": "sub", "args": [{"const": 1}, {"op": "mul", "args": [{"const": 0.6}, {"var": "confusion"}]}]}]},
            {"op": "mul", "args": [{"const": -0.2}, {"var": "frustration"}]},
            {"op": "mul", "args": [{"const": 0.1}, {"op": "sub", "args": [
                {"op": "hash01", "args": [{"var": "noise_seed"},
                    {"op": "add", "args": [{"var": "round"}, {"const": 100}]}]}, {"const": 0.5}]}]}
        ]}]}
      }
    })");

    const auto tree = nlohmann::json::parse(R"({
      "root": {
        "id": "session", "kind": "sequence",
        "children": [
          {
            "id": "TaskActive", "kind": "condition", "inputs": ["task_over"],
            "behaviour": {"return": {"rules": [{"when": {"task_over": false}, "value": "Success"}],
                                     "default": "Failure"}}
          },
          {
            "id": "SetDifficulty", "kind": "action",
            "inputs": ["memory", "round"], "outputs": ["seq_len", "seq_complexity"],
            "actions": ["set_easy", "set_hard"],
            "behaviour": {
              "decide": {"rules": [{"when": {"memory": {"op": "ge", "value": 0.5},
                                             "round": {"op": "ge", "value": 2}},
                                    "value": "set_hard"}],
                         "default": "set_easy"},
              "effect": {"rules": [{"when": {"memory": {"op": "ge", "value": 0.5},
                                             "round": {"op": "ge", "value": 2}},
                                    "value": {"seq_len": 5, "seq_complexity": 3}}],
                         "default": {"seq_len": 3, "seq_complexity": 1}},
              "return": {"default": "Success"}
            }
          },
          {
            "id": "EnsureAttention", "kind": "fallback",
            "children": [
              {
                "id": "IsAttentive", "kind": "condition", "inputs": ["attention"],
                "behaviour": {"return": {"rules": [{"when": {"attention": {"op": "ge", "value": 0.3}},
                                                    "value": "Success"}],
                                         "default": "Failure"}}
              },
              {
                "id": "RecaptureAttention", "kind": "action",
                "inputs": ["attention"], "actions": ["wave", "call_name"],
                "behaviour": {
                  "decide": {"rules": [{"when": {"attention": {"op": "lt", "value": 0.15}},
                                        "value": "call_name"}],
                             "default": "wave"},
                  "return": {"default": "Success"}
                }
              }
            ]
          },
          {
            "id": "PresentSequence", "kind": "action",
            "inputs": ["round"], "outputs": ["round"], "actions": ["present"],
            "behaviour": {
              "decide": {"default": "present"},
              "effect": {"builtin": "advance_round"},
              "return": {"default": "Success"}
            }
          },
          {
            "id": "Respond", "kind": "fallback",
            "children": [
              {
                "id": "CelebratePath", "kind": "sequence",
                "children": [
                  {
                    "id": "RecallSucceeded", "kind": "condition",
                    "inputs": ["accuracy", "response_time"],
                    "behaviour": {"return": {"rules": [{"when": {"accuracy": {"op": "ge", "value": 0.5},
                                                                 "response_time": {"op": "le", "value": 0.6}},
                                                        "value": "Success"}],
                                             "default": "Failure"}}
                  },
                  {
                    "id": "Congratulate", "kind": "action",
                    "inputs": ["engagement"], "actions": ["praise", "high_five"],
                    "behaviour": {
                      "decide": {"rules": [{"when": {"engagement": {"op": "ge", "value": 0.6}},
                                            "value": "high_five"}],
                                 "default": "praise"},
                      "return": {"default": "Success"}
                    }
                  }
                ]
              },
              {
                "id": "SupportPath", "kind": "sequence",
                "children": [
                  {
                    "id": "UserFrustrated", "kind": "condition", "inputs": ["frustration"],
                    "behaviour": {"return": {"rules": [{"when": {"frustration": {"op": "ge", "value": 0.7}},
                                                        "value": "Success"}],
                                             "default": "Failure"}}
                  },
                  {
                    "id": "EndTask", "kind": "action",
                    "outputs": ["task_over"], "actions": ["end_task"],
                    "behaviour": {
                      "decide": {"default": "end_task"},
                      "effect": {"default": {"task_over": true}},
                      "return": {"default": "Success"}
                    }
                  }
                ]
              },
              {
                "id": "Encourage", "kind": "action",
                "inputs": ["engagement"], "actions": ["encourage", "repeat_sequence"],
                "behaviour": {
                  "decide": {"rules": [{"when": {"engagement": {"op": "ge", "value": 0.4}},
                                        "value": "repeat_sequence"}],
                             "default": "encourage"},
                  "return": {"default": "Success"}
                }
              }
            ]
          }
        ]
      }
    })");

    domain d = domain::load(tree, model, {}, "serial_recall");
    d.default_init = serial_recall_profile("default", 0);
    return d;
}

assignment serial_recall_profile(const std::string& name, std::uint64_t seed) {
    assignment a{
        {"attention", value(0.8)},  {"memory", value(0.8)},      {"reactivity", value(0.8)},
        {"frustration", value(0.0)}, {"round", value(0.0)},       {"seq_len", value(3.0)},
        {"seq_complexity", value(1.0)}, {"task_over", value(false)},
        {"noise_seed", value(static_cast<double>(seed % 10007) / 10007.0)},
    };
    if (name == "default") return a;
    if (name == "frustrated") {
        a["frustration"] = value(1.0);
        return a;
    }
    if (name == "no_attention") {
        a["attention"] = value(0.0);
        return a;
    }
    if (name == "no_reactivity") {
        a["reactivity"] = value(0.0);
        return a;
    }
    if (name == "no_memory") {
        a["memory"] = value(0.0);
        return a;
    }
    fail(errc::validation, "unknown user profile '" + name + "'");
}

} // namespace btx
