#pragma once

#include "btx/bt.hpp"
#include "btx/trace.hpp"

namespace btx {

/// Runs one tick of the tree against a full, propagated state assignment.
/// Ticks are memoryless: the pass always restarts from the root; a Running
/// status propagates through the composition rules and simply ends the tick.
///
/// Every visited node appends exactly one node_result in completion order
/// (children before their parent); an action leaf's writes appear as
/// state_change events just before its node_result, followed by the changed
/// values of derived variables. The tick ends with a tick_boundary event.
status run_tick(const bt_tree& tree, const state_model& sm, assignment& state,
                episodic_memory& memory);

/// Initialises a memory from a top-level assignment (derived variables are
/// propagated) and runs `ticks` ticks. Returns the per-tick root statuses.
std::vector<status> run(const domain& d, const assignment& top_level_init, int ticks,
                        episodic_memory& memory);

} // namespace btx
