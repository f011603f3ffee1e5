#include "fexgraph/graph_builder.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace fexgraph {

const char* redundancy_level_name(RedundancyLevel level) {
  switch (level) {
    case RedundancyLevel::none: return "NONE";
    case RedundancyLevel::partial: return "PARTIAL";
    case RedundancyLevel::full: return "FULL";
  }
  return "?";
}

FEGraph build_naive_graph(const ModelSpec& spec) {
  FEGraph graph;
  graph.nodes.push_back(OpNode{0, SourceOp{}});
  NodeId next = 1;
  for (const auto& f : spec.features) {
    NodeId retrieve = next++;
    NodeId decode = next++;
    NodeId filter = next++;
    NodeId compute = next++;
    NodeId sink = next++;

    graph.nodes.push_back(OpNode{retrieve, RetrieveOp{f.event_names, f.time_range_s}});
    graph.nodes.push_back(OpNode{decode, DecodeOp{}});

    HierarchicalFilterPlan plan;
    plan.ranges_desc = {f.time_range_s};
    plan.cumulative_targets = {{FilterTarget{f.feature_id, f.time_range_s, f.attr_names}}};
    plan.union_attrs.assign(f.attr_names.begin(), f.attr_names.end());
    std::sort(plan.union_attrs.begin(), plan.union_attrs.end());
    graph.nodes.push_back(OpNode{filter, FilterOp{std::move(plan)}});

    graph.nodes.push_back(OpNode{compute, ComputeOp{f.feature_id, f.comp_func, f.attr_names}});
    graph.nodes.push_back(OpNode{sink, SinkOp{f.feature_id}});

    graph.edges.emplace_back(0, retrieve);
    graph.edges.emplace_back(retrieve, decode);
    graph.edges.emplace_back(decode, filter);
    graph.edges.emplace_back(filter, compute);
    graph.edges.emplace_back(compute, sink);
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

RedundancyReport identify_redundancy(const ModelSpec& spec) {
  RedundancyReport report;
  report.level_counts[RedundancyLevel::none] = 0;
  report.level_counts[RedundancyLevel::partial] = 0;
  report.level_counts[RedundancyLevel::full] = 0;

  for (const auto& f : spec.features) {
    for (const auto& e : f.event_names) ++report.features_per_event_type[e];
  }

  const auto& features = spec.features;
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = i + 1; j < features.size(); ++j) {
      const auto& a = features[i];
      const auto& b = features[j];
      RedundancyReport::Pair pair;
      pair.feature_a = std::min(a.feature_id, b.feature_id);
      pair.feature_b = std::max(a.feature_id, b.feature_id);
      std::set_intersection(a.event_names.begin(), a.event_names.end(), b.event_names.begin(),
                            b.event_names.end(), std::back_inserter(pair.shared_event_names));
      if (pair.shared_event_names.empty()) {
        pair.level = RedundancyLevel::none;
        pair.overlap_range_s = 0;
      } else {
        pair.overlap_range_s = std::min(a.time_range_s, b.time_range_s);
        const bool same_events = a.event_names == b.event_names;
        const bool same_range = a.time_range_s == b.time_range_s;
        pair.level = (same_events && same_range) ? RedundancyLevel::full : RedundancyLevel::partial;
      }
      ++report.level_counts[pair.level];
      report.pairwise.push_back(std::move(pair));
    }
  }
  return report;
}

double RedundancyReport::level_fraction(RedundancyLevel level) const {
  if (pairwise.empty()) return 0.0;
  auto it = level_counts.find(level);
  return it == level_counts.end()
             ? 0.0
             : static_cast<double>(it->second) / static_cast<double>(pairwise.size());
}

std::string RedundancyReport::to_csv() const {
  std::ostringstream out;
  out << "feature_a,feature_b,level,shared_events,overlap_s\n";
  for (const auto& p : pairwise) {
    out << p.feature_a << ',' << p.feature_b << ',' << redundancy_level_name(p.level) << ',';
    for (std::size_t i = 0; i < p.shared_event_names.size(); ++i) {
      if (i) out << ';';
      out << p.shared_event_names[i];
    }
    out << ',' << p.overlap_range_s << '\n';
  }
  return out.str();
}

std::string RedundancyReport::to_table() const {
  std::ostringstream out;
  out << "redundancy summary over " << pairwise.size() << " feature pairs\n";
  for (auto level : {RedundancyLevel::none, RedundancyLevel::partial, RedundancyLevel::full}) {
    auto it = level_counts.find(level);
    std::size_t count = it == level_counts.end() ? 0 : it->second;
    out << "  " << std::left << std::setw(8) << redundancy_level_name(level) << std::right
        << std::setw(8) << count << "  (" << std::fixed << std::setprecision(1)
        << 100.0 * level_fraction(level) << "%)\n";
  }
  out << "features per event type (" << features_per_event_type.size() << " types):\n";
  for (const auto& [name, count] : features_per_event_type) {
    out << "  " << std::left << std::setw(28) << name << std::right << std::setw(6) << count
        << '\n';
  }
  return out.str();
}

}  // namespace fexgraph
