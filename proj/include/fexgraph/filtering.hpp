#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fexgraph/graph.hpp"

namespace fexgraph {

// One decoded event flowing through a pipeline. Attributes are shared so
// cache splice-in never copies payloads.
struct StreamRow {
  std::int64_t timestamp_ms = 0;
  std::uint64_t event_id = 0;
  std::shared_ptr<const AttributeMap> attrs;
};

// A value routed to one feature, tagged for cross-group chronological merge.
struct RoutedValue {
  std::int64_t timestamp_ms = 0;
  std::uint64_t event_id = 0;
  Json value;
};

struct FilterCounters {
  std::uint64_t threshold_comparisons = 0;
  std::uint64_t emitted_values = 0;
};

// Bucketed age-threshold routing over a chronologically ascending stream.
// For each row the matching bucket is the smallest range still covering the
// row's age; because ages only shrink along the stream, the bucket pointer
// only advances, so threshold comparisons total at most
// len(rows) + len(ranges_desc). Rows must already lie inside the widest
// range. Throws UnsortedInput on a non-ascending stream.
//
// Output is indexed like plan.all_targets(). Rows missing a required
// attribute contribute nothing to that target.
std::vector<std::vector<RoutedValue>> hierarchical_filter(const HierarchicalFilterPlan& plan,
                                                          std::span<const StreamRow> rows,
                                                          std::int64_t request_time_ms,
                                                          FilterCounters& counters);

// Reference filtering: one age test per (row, target) pair, as the unfused
// baseline performs. Same output contract as hierarchical_filter.
std::vector<std::vector<RoutedValue>> direct_filter(const HierarchicalFilterPlan& plan,
                                                    std::span<const StreamRow> rows,
                                                    std::int64_t request_time_ms,
                                                    FilterCounters& counters);

}  // namespace fexgraph
