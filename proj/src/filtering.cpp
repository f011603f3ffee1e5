#include "fexgraph/filtering.hpp"

#include <map>
#include <optional>

#include "fexgraph/errors.hpp"

namespace fexgraph {

namespace {

std::optional<Json> extract_value(const FilterTarget& target, const AttributeMap& attrs) {
  if (target.attr_names.size() == 1) {
    auto it = attrs.find(target.attr_names.front());
    if (it == attrs.end()) return std::nullopt;
    return *it;
  }
  // Multi-attribute targets emit one tuple per row; a row missing any
  // required attribute contributes nothing.
  Json tuple = Json::array();
  for (const auto& name : target.attr_names) {
    auto it = attrs.find(name);
    if (it == attrs.end()) return std::nullopt;
    tuple.push_back(*it);
  }
  return tuple;
}

// Output slot per target, in all_targets() order.
std::map<std::string, std::size_t> output_slots(const HierarchicalFilterPlan& plan) {
  std::map<std::string, std::size_t> slots;
  const auto& all = plan.all_targets();
  for (std::size_t i = 0; i < all.size(); ++i) slots.emplace(all[i].feature_id, i);
  return slots;
}

}  // namespace

std::vector<std::vector<RoutedValue>> hierarchical_filter(const HierarchicalFilterPlan& plan,
                                                          std::span<const StreamRow> rows,
                                                          std::int64_t request_time_ms,
                                                          FilterCounters& counters) {
  const std::size_t buckets = plan.ranges_desc.size();
  std::vector<std::int64_t> ranges_ms(buckets);
  for (std::size_t i = 0; i < buckets; ++i) ranges_ms[i] = plan.ranges_desc[i] * 1000;

  auto slots = output_slots(plan);
  std::vector<std::vector<std::size_t>> bucket_slots(buckets);
  for (std::size_t k = 0; k < buckets; ++k) {
    for (const auto& t : plan.cumulative_targets[k]) {
      bucket_slots[k].push_back(slots.at(t.feature_id));
    }
  }

  std::vector<std::vector<RoutedValue>> out(plan.all_targets().size());
  std::size_t ptr = 0;
  std::int64_t prev_ts = INT64_MIN;
  for (const auto& row : rows) {
    if (row.timestamp_ms < prev_ts) {
      throw_error(Errc::unsorted_input, "filter input not chronologically ascending");
    }
    prev_ts = row.timestamp_ms;
    const std::int64_t age_ms = request_time_ms - row.timestamp_ms;

    // Ages only shrink, so resume from the previous row's bucket and walk
    // toward smaller ranges while they still cover this row.
    while (ptr + 1 < buckets) {
      ++counters.threshold_comparisons;
      if (ranges_ms[ptr + 1] > age_ms) {
        ++ptr;
      } else {
        break;
      }
    }

    const auto& entry = plan.cumulative_targets[ptr];
    for (std::size_t i = 0; i < entry.size(); ++i) {
      if (auto value = extract_value(entry[i], *row.attrs)) {
        out[bucket_slots[ptr][i]].push_back(
            RoutedValue{row.timestamp_ms, row.event_id, std::move(*value)});
        ++counters.emitted_values;
      }
    }
  }
  return out;
}

std::vector<std::vector<RoutedValue>> direct_filter(const HierarchicalFilterPlan& plan,
                                                    std::span<const StreamRow> rows,
                                                    std::int64_t request_time_ms,
                                                    FilterCounters& counters) {
  const auto& targets = plan.all_targets();
  std::vector<std::int64_t> ranges_ms(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) ranges_ms[i] = targets[i].time_range_s * 1000;

  std::vector<std::vector<RoutedValue>> out(targets.size());
  std::int64_t prev_ts = INT64_MIN;
  for (const auto& row : rows) {
    if (row.timestamp_ms < prev_ts) {
      throw_error(Errc::unsorted_input, "filter input not chronologically ascending");
    }
    prev_ts = row.timestamp_ms;
    const std::int64_t age_ms = request_time_ms - row.timestamp_ms;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      ++counters.threshold_comparisons;
      if (age_ms < ranges_ms[i]) {
        if (auto value = extract_value(targets[i], *row.attrs)) {
          out[i].push_back(RoutedValue{row.timestamp_ms, row.event_id, std::move(*value)});
          ++counters.emitted_values;
        }
      }
    }
  }
  return out;
}

}  // namespace fexgraph
