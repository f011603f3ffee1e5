#include "fexgraph/cache_policy.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>

#include "fexgraph/decode_kernels.hpp"
#include "fexgraph/errors.hpp"

namespace fexgraph {

namespace {

constexpr double kIntervalEwmaAlpha = 0.3;
constexpr std::uint64_t kDpUnitBytes = 64;
constexpr std::uint64_t kDpMaxUnits = 1'000'000;
constexpr std::size_t kDpMaxItems = 64;

double now_cost_ns() {
  return static_cast<double>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

}  // namespace

CostMode cost_mode_from_env(CostMode fallback) {
  const char* env = std::getenv("FEXGRAPH_COST_MODE");
  if (env == nullptr) return fallback;
  std::string value(env);
  if (value == "wallclock") return CostMode::wallclock;
  if (value == "abstract") return CostMode::abstract_cost;
  throw_error(Errc::invalid_argument, "FEXGRAPH_COST_MODE must be 'wallclock' or 'abstract'");
}

const CacheTypeState* CacheState::find(const std::string& event_name) const {
  auto it = types.find(event_name);
  return it == types.end() ? nullptr : &it->second;
}

std::vector<EventTypeProfile> profile_event_types(const ModelSpec& spec, const EventLog& log,
                                                  CostMode mode, int sample_rows) {
  auto max_ranges = max_range_by_event(spec);
  auto union_attrs = union_attrs_by_event(spec);

  std::vector<EventTypeProfile> profiles;
  for (const auto& name : referenced_event_names(spec)) {
    EventTypeProfile profile;
    profile.event_name = name;
    profile.max_time_range_s = max_ranges.at(name);

    std::int64_t head = log.last_timestamp_ms();
    std::vector<BehaviorEvent> sample;
    double retrieve_ns_per_row = 0;
    if (head != INT64_MIN) {
      const double fetch_begin = now_cost_ns();
      sample = log.query(name, TimeWindow{INT64_MIN / 2, head});
      const double fetch_ns = now_cost_ns() - fetch_begin;
      if (!sample.empty()) retrieve_ns_per_row = fetch_ns / static_cast<double>(sample.size());
      if (sample.size() > static_cast<std::size_t>(sample_rows)) {
        sample.erase(sample.begin(), sample.end() - sample_rows);
      }
    }
    if (sample.empty()) {
      // Synthetic fallback row: the union attribute set with zero values.
      AttributeMap attrs = Json::object();
      for (const auto& a : union_attrs.at(name)) attrs[a] = 0.0;
      sample.push_back(BehaviorEvent{0, name, 0, encode_payload(attrs)});
    }

    double cost_sum = 0;
    double size_sum = 0;
    const auto& keep = union_attrs.at(name);
    for (const auto& ev : sample) {
      if (mode == CostMode::abstract_cost) {
        cost_sum += 200.0 + 3.0 * static_cast<double>(ev.payload.size());
        const auto attrs = decode_payload(ev.payload);
        size_sum += static_cast<double>(record_size_bytes(prune_attributes(attrs, keep)));
      } else {
        const double begin = now_cost_ns();
        const auto attrs = decode_payload(ev.payload);
        cost_sum += now_cost_ns() - begin + retrieve_ns_per_row;
        size_sum += static_cast<double>(record_size_bytes(prune_attributes(attrs, keep)));
      }
    }
    profile.cost_opt_per_event_ns = cost_sum / static_cast<double>(sample.size());
    profile.size_per_event_bytes = size_sum / static_cast<double>(sample.size());
    profile.static_ratio = profile.cost_opt_per_event_ns / profile.size_per_event_bytes;
    profiles.push_back(std::move(profile));
  }
  return profiles;
}

void refresh_rates(std::vector<EventTypeProfile>& profiles, const EventLog& log,
                   std::int64_t now_ms) {
  for (auto& profile : profiles) {
    const std::int64_t range_ms = profile.max_time_range_s * 1000;
    const std::size_t rows = log.count_in_window(profile.event_name,
                                                 TimeWindow{now_ms - range_ms, now_ms});
    profile.rate_per_s =
        static_cast<double>(rows) / static_cast<double>(profile.max_time_range_s);
  }
}

double cache_utility(const EventTypeProfile& profile, double interval_ms) {
  const double overlap_s =
      std::max(0.0, static_cast<double>(profile.max_time_range_s) - interval_ms / 1000.0);
  return profile.rate_per_s * overlap_s * profile.cost_opt_per_event_ns;
}

double cache_cost_bytes(const EventTypeProfile& profile) {
  return profile.rate_per_s * static_cast<double>(profile.max_time_range_s) *
         profile.size_per_event_bytes;
}

double utility_cost_ratio(const EventTypeProfile& profile, double interval_ms) {
  const double cost = cache_cost_bytes(profile);
  if (cost <= 0.0) return std::numeric_limits<double>::infinity();  // free to keep
  return cache_utility(profile, interval_ms) / cost;
}

CachePlan plan_cache_greedy(const std::vector<EventTypeProfile>& profiles, double interval_ms,
                            std::uint64_t budget_bytes) {
  struct Item {
    const EventTypeProfile* profile;
    double utility;
    double cost;
    double ratio;
  };
  std::vector<Item> items;
  items.reserve(profiles.size());
  CachePlan plan;
  for (const auto& p : profiles) {
    Item item{&p, cache_utility(p, interval_ms), cache_cost_bytes(p),
              utility_cost_ratio(p, interval_ms)};
    plan.ratios[p.event_name] = item.ratio;
    items.push_back(item);
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.ratio != b.ratio) return a.ratio > b.ratio;
    return a.profile->event_name < b.profile->event_name;
  });

  const double budget = static_cast<double>(budget_bytes);
  double used = 0;
  for (const auto& item : items) {
    if (item.cost > budget) continue;  // cannot fit even alone
    if (used + item.cost <= budget) {
      plan.keep.insert(item.profile->event_name);
      plan.predicted_utility += item.utility;
      plan.predicted_cost_bytes += item.cost;
      used += item.cost;
    }
  }

  // 2-approximation needs the better of the bundle and the best single item.
  const Item* best_single = nullptr;
  for (const auto& item : items) {
    if (item.cost <= budget && (best_single == nullptr || item.utility > best_single->utility)) {
      best_single = &item;
    }
  }
  if (best_single != nullptr && best_single->utility > plan.predicted_utility) {
    plan.keep = {best_single->profile->event_name};
    plan.predicted_utility = best_single->utility;
    plan.predicted_cost_bytes = best_single->cost;
  }
  return plan;
}

CachePlan dp_oracle(const std::vector<EventTypeProfile>& profiles, double interval_ms,
                    std::uint64_t budget_bytes) {
  if (profiles.size() > kDpMaxItems) {
    throw_error(Errc::instance_too_large, "dp_oracle supports at most 64 items");
  }
  const std::uint64_t budget_units = budget_bytes / kDpUnitBytes;
  if (budget_units > kDpMaxUnits) {
    throw_error(Errc::instance_too_large, "dp_oracle budget exceeds 10^6 units");
  }

  struct Item {
    std::string name;
    double utility;
    double cost;
    std::uint64_t units;  // rounded up: conservative
  };
  std::vector<Item> items;
  for (const auto& p : profiles) {
    const double cost = cache_cost_bytes(p);
    items.push_back(Item{p.event_name, cache_utility(p, interval_ms), cost,
                         static_cast<std::uint64_t>(
                             std::ceil(cost / static_cast<double>(kDpUnitBytes)))});
  }

  const std::size_t w = static_cast<std::size_t>(budget_units) + 1;
  std::vector<double> best(w, 0.0);
  std::vector<std::vector<bool>> take(items.size(), std::vector<bool>(w, false));
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].units > budget_units) continue;
    for (std::size_t cap = w; cap-- > items[i].units;) {
      const double candidate = best[cap - items[i].units] + items[i].utility;
      if (candidate > best[cap]) {
        best[cap] = candidate;
        take[i][cap] = true;
      }
    }
  }

  CachePlan plan;
  std::size_t cap = w - 1;
  for (std::size_t i = items.size(); i-- > 0;) {
    if (take[i][cap]) {
      plan.keep.insert(items[i].name);
      plan.predicted_utility += items[i].utility;
      plan.predicted_cost_bytes += items[i].cost;
      cap -= items[i].units;
    }
  }
  for (const auto& p : profiles) plan.ratios[p.event_name] = utility_cost_ratio(p, interval_ms);
  return plan;
}

namespace {

void drop_type(CacheState& cache, const std::string& name) {
  auto it = cache.types.find(name);
  if (it == cache.types.end()) return;
  cache.accounted_bytes -= it->second.bytes;
  cache.types.erase(it);
}

// Evict whole types in ascending last-ratio order until the budget holds.
void enforce_budget(CacheState& cache, std::uint64_t budget) {
  while (cache.accounted_bytes > budget && !cache.types.empty()) {
    auto victim = cache.types.begin();
    for (auto it = cache.types.begin(); it != cache.types.end(); ++it) {
      if (it->second.last_ratio < victim->second.last_ratio ||
          (it->second.last_ratio == victim->second.last_ratio && it->first > victim->first)) {
        victim = it;
      }
    }
    drop_type(cache, victim->first);
  }
}

}  // namespace

void update_after_execution(CacheState& cache, const CachePlan& plan,
                            const std::map<std::string, FreshTypeRows>& fresh,
                            std::int64_t request_time_ms,
                            const std::map<std::string, std::int64_t>& max_range_by_type) {
  // Types outside the plan are dropped wholesale (behavior-level caching).
  for (auto it = cache.types.begin(); it != cache.types.end();) {
    if (!plan.keep.contains(it->first)) {
      cache.accounted_bytes -= it->second.bytes;
      it = cache.types.erase(it);
    } else {
      ++it;
    }
  }

  for (const auto& name : plan.keep) {
    auto& state = cache.types[name];
    if (auto rit = plan.ratios.find(name); rit != plan.ratios.end()) {
      state.last_ratio = rit->second;
    }

    if (auto fit = fresh.find(name); fit != fresh.end()) {
      for (const auto& row : fit->second.rows) {
        state.rows.push_back(row);
        state.bytes += row.size_bytes;
        cache.accounted_bytes += row.size_bytes;
      }
      if (fit->second.has_position) {
        if (!state.has_position || fit->second.max_position_ts > state.position_ts ||
            (fit->second.max_position_ts == state.position_ts &&
             fit->second.max_position_id > state.position_id)) {
          state.has_position = true;
          state.position_ts = fit->second.max_position_ts;
          state.position_id = fit->second.max_position_id;
        }
      }
    }

    // Expire rows no future window can need.
    const std::int64_t cutoff = request_time_ms - max_range_by_type.at(name) * 1000;
    auto keep_from = std::partition_point(
        state.rows.begin(), state.rows.end(),
        [&](const CachedRow& row) { return row.timestamp_ms <= cutoff; });
    for (auto it = state.rows.begin(); it != keep_from; ++it) {
      state.bytes -= it->size_bytes;
      cache.accounted_bytes -= it->size_bytes;
    }
    state.rows.erase(state.rows.begin(), keep_from);
  }

  // Predicted costs are estimates; enforce the invariant on actual bytes.
  enforce_budget(cache, cache.budget_bytes);
}

void evict_to_budget(CacheState& cache, std::uint64_t new_budget_bytes) {
  cache.budget_bytes = new_budget_bytes;
  enforce_budget(cache, new_budget_bytes);
}

void observe_request_gap(CacheState& cache, std::int64_t request_time_ms) {
  if (cache.last_request_ms != INT64_MIN) {
    const double gap = static_cast<double>(request_time_ms - cache.last_request_ms);
    if (!cache.interval_observed) {
      cache.interval_estimate_ms = gap;
      cache.interval_observed = true;
    } else {
      cache.interval_estimate_ms =
          kIntervalEwmaAlpha * gap + (1.0 - kIntervalEwmaAlpha) * cache.interval_estimate_ms;
    }
  }
  cache.last_request_ms = request_time_ms;
}

Json cache_summary_rows(const CacheState& cache, const CachePlan& plan) {
  Json rows = Json::array();
  for (const auto& [name, ratio] : plan.ratios) {
    const auto* state = cache.find(name);
    rows.push_back(Json{{"type", name},
                        {"ratio", ratio},
                        {"kept", plan.keep.contains(name)},
                        {"bytes", state ? state->bytes : 0},
                        {"rows", state ? state->rows.size() : 0}});
  }
  return rows;
}

}  // namespace fexgraph
