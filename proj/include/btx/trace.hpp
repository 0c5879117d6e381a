#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "btx/value.hpp"

namespace btx {

/// One entry of the episodic memory. Indices are global across the whole
/// run, strictly increasing and gap-free; index 0 names the initial state
/// snapshot, so the first appended event carries index 1.
struct event {
    enum class kind { node_result, state_change, tick_boundary };

    std::int64_t index = 0;
    kind k = kind::node_result;

    // node_result
    std::string node_id;
    status st = status::invalid;
    std::string action; // empty unless the node is an action leaf

    // state_change
    std::string variable;
    value new_value;

    // tick_boundary; 1-based number of the tick this event closes
    std::int64_t tick = 0;

    static event node_result(std::int64_t index, std::string node_id, status st,
                             std::string action = "");
    static event state_change(std::int64_t index, std::string variable, value v);
    static event tick_boundary(std::int64_t index, std::int64_t tick);
};

/// Flat view of a run as of some event index.
struct memory_slice {
    assignment state;                              // latest value of every variable
    std::map<std::string, status> node_status;     // Invalid for unexecuted nodes
    std::map<std::string, std::string> node_action;
    std::int64_t ticks_completed = 0;
};

/// Append-only log of one execution: the initial full state plus events.
class episodic_memory {
public:
    assignment initial; // full state assignment at time 0
    std::string tree_name;
    std::string model_name;

    const std::vector<event>& events() const { return events_; }
    /// Log length counting the initial snapshot at index 0.
    std::int64_t length() const { return 1 + static_cast<std::int64_t>(events_.size()); }
    std::int64_t last_index() const { return static_cast<std::int64_t>(events_.size()); }

    /// Requires e.index == length(); keeps the log gap-free.
    void append(event e);

    const event& at(std::int64_t index) const;

    memory_slice slice_until(std::int64_t k) const;

    /// Number of node_result events with index <= k.
    std::int64_t node_time_of(std::int64_t k) const;
    /// Global index of the n-th node_result event (n >= 1); 0 maps to 0.
    std::int64_t index_of_node_time(std::int64_t n) const;
    /// Global index of the n-th node_result event belonging to a leaf. Leaf
    /// ids must be supplied since the log itself does not know node kinds.
    std::int64_t index_of_leaf_time(std::int64_t n, const std::vector<std::string>& leaf_ids) const;

    /// First index of the tick containing event k, and that tick's 1-based
    /// number. A tick_boundary belongs to the tick it closes.
    std::pair<std::int64_t, std::int64_t> tick_span_start(std::int64_t k) const;
    /// Index of the tick_boundary event closing the given tick.
    std::int64_t tick_end_index(std::int64_t tick) const;

    void save(std::ostream& os) const;
    static episodic_memory load(std::istream& is);
    std::string to_jsonl() const;
    static episodic_memory from_jsonl(const std::string& text);

private:
    std::vector<event> events_;
};

} // namespace btx
