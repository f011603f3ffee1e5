#pragma once

#include "fexgraph/cache_policy.hpp"
#include "fexgraph/compute.hpp"
#include "fexgraph/event_log.hpp"
#include "fexgraph/graph.hpp"
#include "fexgraph/op_stats.hpp"

namespace fexgraph {

struct EngineOptions {
  bool fuse = true;       // execute the fused graph with hierarchical filtering
  bool cache = true;      // reuse decoded rows across requests
  bool parallel = false;  // OpenMP across retrieve groups and decode batches
  CostMode cost_mode = CostMode::abstract_cost;
  int profile_sample_rows = 100;
};

struct ExtractionResult {
  std::string model_id;
  std::int64_t request_time_ms = 0;
  std::map<std::string, FeatureValue> values;          // one entry per feature
  std::map<std::string, std::string> feature_errors;   // per-feature type mismatches
  OpStats stats;

  Json to_json() const;
};

// Online feature extraction over a compiled graph. One extraction at a time
// per instance; request times must be non-decreasing when caching is on.
// Log appends may proceed concurrently under the event log's snapshot
// contract. Feature values are independent of cache state.
class Engine {
 public:
  Engine(ModelSpec spec, EventLog& log, EngineOptions options);

  ExtractionResult extract(std::int64_t request_time_ms);

  const ModelSpec& spec() const { return spec_; }
  const FEGraph& graph() const { return graph_; }
  const CacheState& cache_state() const { return cache_; }
  const CachePlan& last_plan() const { return last_plan_; }
  const std::vector<EventTypeProfile>& profiles() const { return profiles_; }
  const EngineOptions& options() const { return options_; }

  // Applies the new budget immediately, evicting whole types if needed.
  void set_cache_budget(std::uint64_t bytes);

 private:
  struct Group {
    RetrieveOp retrieve;
    HierarchicalFilterPlan plan;
  };

  struct GroupOutput {
    OpStats stats;
    // parallel to plan.all_targets(): routed values per feature
    std::vector<std::vector<RoutedValue>> per_target;
    // decoded fresh rows per event type, unpruned, for the cache update
    std::map<std::string, std::vector<StreamRow>> fresh_rows;
    std::map<std::string, std::pair<std::int64_t, std::uint64_t>> fresh_positions;
  };

  GroupOutput run_group(const Group& group, std::int64_t request_time_ms) const;
  void update_cache(const std::vector<GroupOutput>& outputs, std::int64_t request_time_ms);

  ModelSpec spec_;
  EventLog& log_;
  EngineOptions options_;
  FEGraph graph_;
  std::vector<Group> groups_;
  std::map<std::string, const FeatureSpec*> feature_index_;
  std::map<std::string, std::int64_t> max_ranges_;
  std::map<std::string, std::set<std::string>> union_attrs_;

  std::vector<EventTypeProfile> profiles_;
  CacheState cache_;
  CachePlan last_plan_;
};

}  // namespace fexgraph
