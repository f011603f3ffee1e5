#pragma once

#include <map>

#include "fexgraph/graph.hpp"

namespace fexgraph {

enum class RedundancyLevel { none, partial, full };

const char* redundancy_level_name(RedundancyLevel level);

// Pairwise overlap of <event_names, time_range> conditions across features
// of one model, plus aggregate counts.
struct RedundancyReport {
  struct Pair {
    std::string feature_a;  // feature_a < feature_b
    std::string feature_b;
    RedundancyLevel level = RedundancyLevel::none;
    std::vector<std::string> shared_event_names;
    std::int64_t overlap_range_s = 0;
  };

  std::vector<Pair> pairwise;
  std::map<RedundancyLevel, std::size_t> level_counts;
  std::map<std::string, std::size_t> features_per_event_type;

  std::size_t pair_count() const { return pairwise.size(); }
  double level_fraction(RedundancyLevel level) const;

  // Machine-readable rows: feature_a,feature_b,level,shared_events,overlap_s
  std::string to_csv() const;
  // Aligned human summary.
  std::string to_table() const;
};

// One disjoint retrieve/decode/filter/compute chain per feature, hanging off
// the single source node. Expects a normalized spec.
FEGraph build_naive_graph(const ModelSpec& spec);

// Classify every feature pair by condition-set intersection, computed from
// the spec itself rather than from a graph object.
RedundancyReport identify_redundancy(const ModelSpec& spec);

}  // namespace fexgraph
