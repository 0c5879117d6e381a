#include "btx/domains.hpp"

#include <nlohmann/json.hpp>

namespace btx {

// Fallback root "sel" over a sequence "seq" (condition L0, action L1) and a
// recovery action L2. L0 succeeds iff Xa; L1 copies Xa into Xb; L2 sets Xb
// and picks a2 while Xd holds, a3 otherwise.
domain case_study_domain() {
    const auto tree = nlohmann::json::parse(R"({
      "root": {
        "id": "sel", "kind": "fallback",
        "children": [
          {
            "id": "seq", "kind": "sequence",
            "children": [
              {
                "id": "L0", "kind": "condition", "inputs": ["Xa"],
                "behaviour": {
                  "return": {"rules": [{"when": {"Xa": true}, "value": "Success"}],
                             "default": "Failure"}
                }
              },
              {
                "id": "L1", "kind": "action",
                "inputs": ["Xa", "Xc"], "outputs": ["Xb"], "actions": ["a0", "a1"],
                "behaviour": {
                  "decide": {"rules": [{"when": {"Xa": true}, "value": "a1"}], "default": "a0"},
                  "effect": {"rules": [{"when": {"Xa": true}, "value": {"Xb": true}}],
                             "default": {"Xb": false}},
                  "return": {"default": "Success"}
                }
              }
            ]
          },
          {
            "id": "L2", "kind": "action",
            "inputs": ["Xd"], "outputs": ["Xb"], "actions": ["a2", "a3"],
            "behaviour": {
              "decide": {"rules": [{"when": {"Xd": true}, "value": "a2"}], "default": "a3"},
              "effect": {"default": {"Xb": true}},
              "return": {"default": "Success"}
            }
          }
        ]
      }
    })");

    const auto model = nlohmann::json::parse(R"({
      "variables": [
        {"name": "Xa", "range": "boolean"},
        {"name": "Xb", "range": "boolean"},
        {"name": "Xc", "range": "boolean"},
        {"name": "Xd", "range": "boolean"}
      ],
      "edges": [["Xa", "Xc"], ["Xb", "Xc"], ["Xb", "Xd"]],
      "functions": {
        "Xc": {"op": "and", "args": [{"var": "Xa"}, {"var": "Xb"}]},
        "Xd": {"op": "not", "args": [{"var": "Xb"}]}
      }
    })");

    assignment init{{"Xa", value(false)}, {"Xb", value(false)}};
    return domain::load(tree, model, init, "case_study");
}

} // namespace btx
