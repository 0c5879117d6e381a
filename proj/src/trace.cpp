#include "btx/trace.hpp"

#include <algorithm>
#include <sstream>

#include <nlohmann/json.hpp>

#include "btx/state_model.hpp"

namespace btx {

event event::node_result(std::int64_t index, std::string node_id, status st, std::string action) {
    event e;
    e.index = index;
    e.k = kind::node_result;
    e.node_id = std::move(node_id);
    e.st = st;
    e.action = std::move(action);
    return e;
}

event event::state_change(std::int64_t index, std::string variable, value v) {
    event e;
    e.index = index;
    e.k = kind::state_change;
    e.variable = std::move(variable);
    e.new_value = std::move(v);
    return e;
}

event event::tick_boundary(std::int64_t index, std::int64_t tick) {
    event e;
    e.index = index;
    e.k = kind::tick_boundary;
    e.tick = tick;
    return e;
}

void episodic_memory::append(event e) {
    if (e.index != length())
        fail(errc::index_mismatch, "event index " + std::to_string(e.index) +
                                       " does not match log length " + std::to_string(length()));
    if (e.k == event::kind::node_result && e.st == status::invalid)
        fail(errc::validation, "node_result events must not carry Invalid");
    events_.push_back(std::move(e));
}

const event& episodic_memory::at(std::int64_t index) const {
    if (index < 1 || index > last_index())
        fail(errc::out_of_range, "event index " + std::to_string(index) + " out of range");
    return events_[static_cast<size_t>(index - 1)];
}

memory_slice episodic_memory::slice_until(std::int64_t k) const {
    if (k < 0 || k > last_index())
        fail(errc::out_of_range, "time " + std::to_string(k) + " out of range");
    memory_slice s;
    s.state = initial;
    for (std::int64_t i = 1; i <= k; ++i) {
        const event& e = events_[static_cast<size_t>(i - 1)];
        switch (e.k) {
            case event::kind::state_change: s.state[e.variable] = e.new_value; break;
            case event::kind::node_result:
                s.node_status[e.node_id] = e.st;
                if (!e.action.empty()) s.node_action[e.node_id] = e.action;
                break;
            case event::kind::tick_boundary:
                s.node_status.clear();
                s.node_action.clear();
                s.ticks_completed = e.tick;
                break;
        }
    }
    return s;
}

std::int64_t episodic_memory::node_time_of(std::int64_t k) const {
    std::int64_t n = 0;
    for (std::int64_t i = 1; i <= std::min(k, last_index()); ++i)
        if (events_[static_cast<size_t>(i - 1)].k == event::kind::node_result) ++n;
    return n;
}

std::int64_t episodic_memory::index_of_node_time(std::int64_t n) const {
    if (n == 0) return 0;
    std::int64_t seen = 0;
    for (const auto& e : events_) {
        if (e.k == event::kind::node_result && ++seen == n) return e.index;
    }
    fail(errc::out_of_range, "no node execution #" + std::to_string(n) + " in this trace");
}

std::int64_t episodic_memory::index_of_leaf_time(std::int64_t n,
                                                 const std::vector<std::string>& leaf_ids) const {
    if (n == 0) return 0;
    std::int64_t seen = 0;
    for (const auto& e : events_) {
        if (e.k != event::kind::node_result) continue;
        if (std::find(leaf_ids.begin(), leaf_ids.end(), e.node_id) == leaf_ids.end()) continue;
        if (++seen == n) return e.index;
    }
    fail(errc::out_of_range, "no leaf execution #" + std::to_string(n) + " in this trace");
}

std::pair<std::int64_t, std::int64_t> episodic_memory::tick_span_start(std::int64_t k) const {
    if (k < 0 || k > last_index())
        fail(errc::out_of_range, "time " + std::to_string(k) + " out of range");
    std::int64_t start = 1;
    std::int64_t tick = 1;
    for (std::int64_t i = 1; i < k; ++i) {
        const event& e = events_[static_cast<size_t>(i - 1)];
        if (e.k == event::kind::tick_boundary) {
            start = i + 1;
            tick = e.tick + 1;
        }
    }
    return {start, tick};
}

std::int64_t episodic_memory::tick_end_index(std::int64_t tick) const {
    for (const auto& e : events_)
        if (e.k == event::kind::tick_boundary && e.tick == tick) return e.index;
    fail(errc::out_of_range, "tick " + std::to_string(tick) + " not closed in this trace");
}

namespace {

nlohmann::json event_to_json(const event& e) {
    switch (e.k) {
        case event::kind::node_result: {
            nlohmann::json j{{"index", e.index}, {"kind", "node"}, {"node", e.node_id},
                             {"status", to_string(e.st)}};
            if (!e.action.empty()) j["action"] = e.action;
            return j;
        }
        case event::kind::state_change:
            return {{"index", e.index}, {"kind", "state"}, {"var", e.variable},
                    {"value", value_to_json(e.new_value)}};
        case event::kind::tick_boundary:
            return {{"index", e.index}, {"kind", "tick"}, {"tick", e.tick}};
    }
    return nullptr;
}

event event_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const std::int64_t index = j.at("index").get<std::int64_t>();
    if (kind == "node")
        return event::node_result(index, j.at("node").get<std::string>(),
                                  status_from_string(j.at("status").get<std::string>()),
                                  j.value("action", std::string()));
    if (kind == "state")
        return event::state_change(index, j.at("var").get<std::string>(),
                                   json_to_value(j.at("value")));
    if (kind == "tick") return event::tick_boundary(index, j.at("tick").get<std::int64_t>());
    fail(errc::parse, "unknown event kind '" + kind + "'");
}

} // namespace

void episodic_memory::save(std::ostream& os) const {
    nlohmann::json header{{"initial", assignment_to_json(initial)},
                          {"tree", tree_name},
                          {"state_model", model_name}};
    os << header.dump() << "\n";
    for (const auto& e : events_) os << event_to_json(e).dump() << "\n";
}

episodic_memory episodic_memory::load(std::istream& is) {
    episodic_memory m;
    std::string line;
    if (!std::getline(is, line)) fail(errc::parse, "trace file is empty");
    nlohmann::json header = nlohmann::json::parse(line);
    m.initial = assignment_from_json(header.at("initial"));
    m.tree_name = header.value("tree", std::string());
    m.model_name = header.value("state_model", std::string());
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        m.append(event_from_json(nlohmann::json::parse(line)));
    }
    return m;
}

std::string episodic_memory::to_jsonl() const {
    std::ostringstream os;
    save(os);
    return os.str();
}

episodic_memory episodic_memory::from_jsonl(const std::string& text) {
    std::istringstream is(text);
    return load(is);
}

} // namespace btx
