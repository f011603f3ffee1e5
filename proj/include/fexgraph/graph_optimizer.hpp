#pragma once

#include "fexgraph/graph.hpp"

namespace fexgraph {

// Split every feature chain whose retrieve covers k event names into k
// sub-chains of one event name each, all feeding the feature's compute node.
// Sub-retrieves keep the original time range.
FEGraph partition_chains(const FEGraph& naive_graph);

// Fuse partitioned sub-chains that share an event name: per distinct event
// name one retrieve (widest range), one decode, and one filter whose plan
// routes rows to every fused feature. Output separation is embedded in the
// filter plans; no standalone branch nodes exist.
FEGraph fuse_chains(const FEGraph& partitioned_graph);

// Reverse mapping from time-range buckets to cumulative target sets for one
// event name. All targets must reference that event name.
HierarchicalFilterPlan build_filter_plan(const std::string& event_name,
                                         std::vector<FilterTarget> targets);

// build_naive_graph -> partition_chains -> fuse_chains.
FEGraph optimize(const ModelSpec& spec);

}  // namespace fexgraph
