#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fexgraph/event_log.hpp"
#include "fexgraph/feature_spec.hpp"
#include "fexgraph/filtering.hpp"

namespace fexgraph {

enum class CostMode {
  abstract_cost,  // deterministic: 200 + 3 * payload_bytes ns-units per row
  wallclock,      // measured retrieve+decode time per row
};

CostMode cost_mode_from_env(CostMode fallback = CostMode::abstract_cost);

// Static per-behavior-type profile plus the observed arrival rate refreshed
// at planning time.
struct EventTypeProfile {
  std::string event_name;
  double cost_opt_per_event_ns = 0;   // retrieve+decode cost per row
  double size_per_event_bytes = 0;    // pruned record size incl. fixed overhead
  std::int64_t max_time_range_s = 0;  // widest range among features using this type
  double static_ratio = 0;            // cost_opt_per_event_ns / size_per_event_bytes
  double rate_per_s = 0;              // observed arrivals per second
};

// One cached decoded row, pruned to the type's union attribute set.
struct CachedRow {
  std::uint64_t event_id = 0;
  std::int64_t timestamp_ms = 0;
  std::shared_ptr<const AttributeMap> attrs;
  std::uint32_t size_bytes = 0;
};

struct CacheTypeState {
  std::vector<CachedRow> rows;  // ascending by (timestamp, event_id)
  bool has_position = false;    // false => next fetch scans the full window
  std::int64_t position_ts = INT64_MIN;
  std::uint64_t position_id = 0;
  std::uint64_t bytes = 0;
  double last_ratio = 0;  // utility/cost at the most recent planning
};

struct CacheState {
  std::map<std::string, CacheTypeState> types;
  std::uint64_t accounted_bytes = 0;
  std::uint64_t budget_bytes = 0;
  double interval_estimate_ms = 60'000.0;  // default before two requests exist
  bool interval_observed = false;
  std::int64_t last_request_ms = INT64_MIN;

  const CacheTypeState* find(const std::string& event_name) const;
};

struct CachePlan {
  std::set<std::string> keep;
  double predicted_utility = 0;
  double predicted_cost_bytes = 0;
  std::map<std::string, double> ratios;  // utility/cost per type at planning
};

// Fresh decoded rows of one type from the current execution, pruned to the
// type's union attribute set and deduplicated across chains.
struct FreshTypeRows {
  std::vector<CachedRow> rows;
  bool has_position = false;
  std::int64_t max_position_ts = INT64_MIN;
  std::uint64_t max_position_id = 0;
};

// Offline profiling over up to `sample_rows` recent rows per type; types
// absent from the log get a synthetic fallback row built from their union
// attribute set.
std::vector<EventTypeProfile> profile_event_types(const ModelSpec& spec, const EventLog& log,
                                                  CostMode mode, int sample_rows = 100);

// Re-estimate arrival rates from the log over each type's own max range.
void refresh_rates(std::vector<EventTypeProfile>& profiles, const EventLog& log,
                   std::int64_t now_ms);

// Expected rows overlapping the next execution times the per-row cost saved.
double cache_utility(const EventTypeProfile& profile, double interval_ms);

// Expected bytes to hold the type's in-window rows.
double cache_cost_bytes(const EventTypeProfile& profile);

double utility_cost_ratio(const EventTypeProfile& profile, double interval_ms);

// Ratio-descending greedy (ties by event_name), then take the better of the
// greedy bundle and the best single fitting item; this variant carries the
// standard 2-approximation guarantee.
CachePlan plan_cache_greedy(const std::vector<EventTypeProfile>& profiles, double interval_ms,
                            std::uint64_t budget_bytes);

// Exact optimum with costs discretized up to 64-byte units. Test-scale only:
// throws InstanceTooLarge beyond 64 items or 10^6 budget units.
CachePlan dp_oracle(const std::vector<EventTypeProfile>& profiles, double interval_ms,
                    std::uint64_t budget_bytes);

// Apply a plan after an execution: drop types not kept, append fresh rows,
// prune rows older than request - max_range, advance positions, and evict
// whole types (ascending ratio) if actual bytes exceed the budget.
void update_after_execution(CacheState& cache, const CachePlan& plan,
                            const std::map<std::string, FreshTypeRows>& fresh,
                            std::int64_t request_time_ms,
                            const std::map<std::string, std::int64_t>& max_range_by_type);

// Evict whole event types in ascending utility/cost order until accounted
// bytes fit the new budget.
void evict_to_budget(CacheState& cache, std::uint64_t new_budget_bytes);

// EWMA (alpha = 0.3) over observed request gaps, seeded by the first gap.
void observe_request_gap(CacheState& cache, std::int64_t request_time_ms);

// Machine-readable rows (type, ratio, kept, bytes, rows) for reports.
Json cache_summary_rows(const CacheState& cache, const CachePlan& plan);

}  // namespace fexgraph
