#include "fexgraph/executor.hpp"

#include <algorithm>
#include <chrono>

#include "fexgraph/decode_kernels.hpp"
#include "fexgraph/errors.hpp"
#include "fexgraph/graph_builder.hpp"
#include "fexgraph/graph_optimizer.hpp"

namespace fexgraph {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t elapsed_ns(Clock::time_point since) {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - since).count());
}

bool row_pos_less(const StreamRow& a, const StreamRow& b) {
  return a.timestamp_ms != b.timestamp_ms ? a.timestamp_ms < b.timestamp_ms
                                          : a.event_id < b.event_id;
}

// Merge per-name sorted streams into one chronological stream.
std::vector<StreamRow> merge_streams(std::vector<std::vector<StreamRow>>& streams) {
  if (streams.size() == 1) return std::move(streams.front());
  std::vector<StreamRow> merged;
  std::size_t total = 0;
  for (const auto& s : streams) total += s.size();
  merged.reserve(total);
  for (auto& s : streams) {
    auto middle = merged.insert(merged.end(), std::make_move_iterator(s.begin()),
                                std::make_move_iterator(s.end()));
    std::inplace_merge(merged.begin(), middle, merged.end(), row_pos_less);
  }
  return merged;
}

std::vector<Json> merge_routed_runs(std::vector<std::vector<RoutedValue>>& runs,
                                    std::size_t* count_out) {
  auto value_pos_less = [](const RoutedValue& a, const RoutedValue& b) {
    return a.timestamp_ms != b.timestamp_ms ? a.timestamp_ms < b.timestamp_ms
                                            : a.event_id < b.event_id;
  };
  std::vector<RoutedValue> merged;
  std::size_t total = 0;
  for (const auto& r : runs) total += r.size();
  merged.reserve(total);
  for (auto& r : runs) {
    auto middle = merged.insert(merged.end(), std::make_move_iterator(r.begin()),
                                std::make_move_iterator(r.end()));
    std::inplace_merge(merged.begin(), middle, merged.end(), value_pos_less);
  }
  std::vector<Json> values;
  values.reserve(merged.size());
  for (auto& rv : merged) values.push_back(std::move(rv.value));
  *count_out = values.size();
  return values;
}

}  // namespace

Json ExtractionResult::to_json() const {
  Json vals = Json::object();
  for (const auto& [fid, value] : values) vals[fid] = value.to_json();
  Json errs = Json::object();
  for (const auto& [fid, msg] : feature_errors) errs[fid] = msg;
  return Json{{"model_id", model_id},
              {"request_time_ms", request_time_ms},
              {"values", std::move(vals)},
              {"errors", std::move(errs)},
              {"stats", stats.to_json()}};
}

Engine::Engine(ModelSpec spec, EventLog& log, EngineOptions options)
    : spec_(normalize(std::move(spec))), log_(log), options_(options) {
  validate_model_spec(spec_);
  graph_ = options_.fuse ? optimize(spec_) : build_naive_graph(spec_);
  validate_graph(graph_);

  for (const auto& node : graph_.nodes) {
    if (node.kind() != OpKind::retrieve) continue;
    auto decode_ids = graph_.children(node.id);
    auto filter_ids = graph_.children(decode_ids.front());
    groups_.push_back(
        Group{node.as<RetrieveOp>(), graph_.node(filter_ids.front()).as<FilterOp>().plan});
  }
  for (const auto& f : spec_.features) feature_index_[f.feature_id] = &f;
  max_ranges_ = max_range_by_event(spec_);
  union_attrs_ = union_attrs_by_event(spec_);

  if (options_.cache) {
    profiles_ = profile_event_types(spec_, log_, options_.cost_mode, options_.profile_sample_rows);
    cache_.budget_bytes = spec_.cache_budget_bytes;
  }
}

Engine::GroupOutput Engine::run_group(const Group& group, std::int64_t request_time_ms) const {
  GroupOutput out;
  const std::int64_t window_start = request_time_ms - group.retrieve.time_range_s * 1000;
  const TimeWindow window{window_start, request_time_ms};

  std::vector<std::vector<StreamRow>> streams;
  for (const auto& name : group.retrieve.event_names) {
    std::vector<StreamRow> stream;
    const CacheTypeState* entry = options_.cache ? cache_.find(name) : nullptr;

    if (entry != nullptr) {
      auto begin = std::partition_point(
          entry->rows.begin(), entry->rows.end(),
          [&](const CachedRow& row) { return row.timestamp_ms <= window_start; });
      for (auto it = begin; it != entry->rows.end(); ++it) {
        stream.push_back(StreamRow{it->timestamp_ms, it->event_id, it->attrs});
      }
      out.stats.cache_hit_rows += static_cast<std::uint64_t>(entry->rows.end() - begin);
    }

    auto fetch_begin = Clock::now();
    std::vector<BehaviorEvent> raw;
    if (entry != nullptr && entry->has_position && entry->position_ts >= window_start) {
      // Residual fetch: everything strictly after the cached position.
      raw = log_.query_since(name, entry->position_ts, entry->position_id, request_time_ms);
    } else {
      raw = log_.query(name, window);
    }
    out.stats.retrieve_ns += elapsed_ns(fetch_begin);
    out.stats.rows_retrieved += raw.size();
    if (options_.cache) out.stats.cache_miss_rows += raw.size();

    // Boundary rows sharing the cached position's timestamp can fall outside
    // the window; drop them before decode.
    std::erase_if(raw, [&](const BehaviorEvent& ev) { return !window.contains(ev.timestamp_ms); });

    if (!raw.empty()) {
      // each event name appears at most once per group
      out.fresh_positions[name] = {raw.back().timestamp_ms, raw.back().event_id};
    }

    auto decode_begin = Clock::now();
    auto decoded = decode_batch(raw, options_.parallel);
    out.stats.decode_ns += elapsed_ns(decode_begin);
    out.stats.decode_calls += decoded.decoded;
    out.stats.malformed_rows += decoded.malformed;
    out.stats.decoded_payload_bytes += decoded.payload_bytes;

    if (options_.cache) {
      auto& fresh = out.fresh_rows[name];
      fresh.insert(fresh.end(), decoded.rows.begin(), decoded.rows.end());
    }
    stream.insert(stream.end(), std::make_move_iterator(decoded.rows.begin()),
                  std::make_move_iterator(decoded.rows.end()));
    streams.push_back(std::move(stream));
  }

  auto merged = merge_streams(streams);

  auto filter_begin = Clock::now();
  FilterCounters counters;
  out.per_target = options_.fuse
                       ? hierarchical_filter(group.plan, merged, request_time_ms, counters)
                       : direct_filter(group.plan, merged, request_time_ms, counters);
  out.stats.filter_ns += elapsed_ns(filter_begin);
  out.stats.filter_threshold_comparisons += counters.threshold_comparisons;
  return out;
}

ExtractionResult Engine::extract(std::int64_t request_time_ms) {
  const auto start = Clock::now();
  ExtractionResult result;
  result.model_id = spec_.model_id;
  result.request_time_ms = request_time_ms;

  std::vector<GroupOutput> outputs(groups_.size());
#ifdef FEXGRAPH_HAVE_OPENMP
  if (options_.parallel && groups_.size() > 1) {
    std::vector<std::exception_ptr> errors(groups_.size());
    const std::int64_t n = static_cast<std::int64_t>(groups_.size());
    #pragma omp parallel for schedule(dynamic)
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        outputs[i] = run_group(groups_[i], request_time_ms);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
    for (const auto& err : errors) {
      if (err) std::rethrow_exception(err);
    }
  } else
#endif
  {
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      outputs[i] = run_group(groups_[i], request_time_ms);
    }
  }

  // Gather routed runs per feature (one run per contributing group), in
  // deterministic group order.
  std::map<std::string, std::vector<std::vector<RoutedValue>>> feature_runs;
  for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
    result.stats += outputs[gi].stats;
    const auto& targets = groups_[gi].plan.all_targets();
    for (std::size_t ti = 0; ti < targets.size(); ++ti) {
      feature_runs[targets[ti].feature_id].push_back(std::move(outputs[gi].per_target[ti]));
    }
  }

  const auto compute_begin = Clock::now();
  for (const auto& f : spec_.features) {
    std::size_t value_count = 0;
    auto values = merge_routed_runs(feature_runs[f.feature_id], &value_count);
    result.stats.compute_values += value_count;
    ++result.stats.compute_calls;
    try {
      result.values[f.feature_id] = compute(f.comp_func, values);
    } catch (const Error& e) {
      if (e.code() != Errc::type_mismatch) throw;
      result.values[f.feature_id] = FeatureValue::missing();
      result.feature_errors[f.feature_id] = e.what();
    }
  }
  result.stats.compute_ns += elapsed_ns(compute_begin);

  if (options_.cache) {
    const auto cache_begin = Clock::now();
    update_cache(outputs, request_time_ms);
    result.stats.cache_ns += elapsed_ns(cache_begin);
  }

  result.stats.total_ns = elapsed_ns(start);
  return result;
}

void Engine::update_cache(const std::vector<GroupOutput>& outputs,
                          std::int64_t request_time_ms) {
  observe_request_gap(cache_, request_time_ms);
  refresh_rates(profiles_, log_, request_time_ms);
  last_plan_ = plan_cache_greedy(profiles_, cache_.interval_estimate_ms, cache_.budget_bytes);

  // Deduplicate fresh rows across groups (unfused chains sharing an event
  // type decode the same residual rows), prune to the type's union attribute
  // set, and advance positions.
  std::map<std::string, FreshTypeRows> fresh;
  std::map<std::string, std::map<std::pair<std::int64_t, std::uint64_t>, const StreamRow*>> dedup;
  for (const auto& out : outputs) {
    for (const auto& [name, rows] : out.fresh_rows) {
      auto& slot = dedup[name];
      for (const auto& row : rows) slot.emplace(std::make_pair(row.timestamp_ms, row.event_id), &row);
    }
    for (const auto& [name, pos] : out.fresh_positions) {
      auto& f = fresh[name];
      if (!f.has_position || pos > std::make_pair(f.max_position_ts, f.max_position_id)) {
        f.has_position = true;
        f.max_position_ts = pos.first;
        f.max_position_id = pos.second;
      }
    }
  }
  for (auto& [name, rows] : dedup) {
    if (!last_plan_.keep.contains(name)) continue;  // skip pruning work for dropped types
    const auto& keep_attrs = union_attrs_.at(name);
    auto& f = fresh[name];
    for (const auto& [pos, row] : rows) {
      auto pruned = std::make_shared<const AttributeMap>(prune_attributes(*row->attrs, keep_attrs));
      const auto size = static_cast<std::uint32_t>(record_size_bytes(*pruned));
      f.rows.push_back(CachedRow{row->event_id, row->timestamp_ms, std::move(pruned), size});
    }
  }

  update_after_execution(cache_, last_plan_, fresh, request_time_ms, max_ranges_);
}

void Engine::set_cache_budget(std::uint64_t bytes) {
  spec_.cache_budget_bytes = bytes;
  evict_to_budget(cache_, bytes);
}

}  // namespace fexgraph
