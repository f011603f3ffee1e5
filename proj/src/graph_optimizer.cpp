#include "fexgraph/graph_optimizer.hpp"

#include <algorithm>
#include <map>

#include "fexgraph/errors.hpp"
#include "fexgraph/graph_builder.hpp"

namespace fexgraph {

namespace {

struct Chain {
  RetrieveOp retrieve;
  HierarchicalFilterPlan plan;
  ComputeOp compute;
};

// Recover the per-feature chains of a naive or partitioned graph by walking
// retrieve -> decode -> filter -> compute.
std::vector<Chain> collect_chains(const FEGraph& graph) {
  std::vector<Chain> chains;
  for (const auto& node : graph.nodes) {
    if (node.kind() != OpKind::retrieve) continue;
    Chain chain;
    chain.retrieve = node.as<RetrieveOp>();
    auto decode_ids = graph.children(node.id);
    if (decode_ids.size() != 1) throw_error(Errc::invalid_argument, "retrieve fan-out != 1");
    auto filter_ids = graph.children(decode_ids[0]);
    if (filter_ids.size() != 1) throw_error(Errc::invalid_argument, "decode fan-out != 1");
    chain.plan = graph.node(filter_ids[0]).as<FilterOp>().plan;
    auto compute_ids = graph.children(filter_ids[0]);
    if (compute_ids.size() != 1 || chain.plan.all_targets().size() != 1) {
      throw_error(Errc::invalid_argument, "expected an unfused per-feature chain");
    }
    chain.compute = graph.node(compute_ids[0]).as<ComputeOp>();
    chains.push_back(std::move(chain));
  }
  return chains;
}

}  // namespace

HierarchicalFilterPlan build_filter_plan(const std::string& event_name,
                                         std::vector<FilterTarget> targets) {
  HierarchicalFilterPlan plan;
  plan.event_name = event_name;
  std::sort(targets.begin(), targets.end(),
            [](const FilterTarget& a, const FilterTarget& b) { return a.feature_id < b.feature_id; });

  for (const auto& t : targets) {
    plan.ranges_desc.push_back(t.time_range_s);
    for (const auto& a : t.attr_names) plan.union_attrs.push_back(a);
  }
  std::sort(plan.ranges_desc.begin(), plan.ranges_desc.end(), std::greater<>());
  plan.ranges_desc.erase(std::unique(plan.ranges_desc.begin(), plan.ranges_desc.end()),
                         plan.ranges_desc.end());
  std::sort(plan.union_attrs.begin(), plan.union_attrs.end());
  plan.union_attrs.erase(std::unique(plan.union_attrs.begin(), plan.union_attrs.end()),
                         plan.union_attrs.end());

  for (std::int64_t range : plan.ranges_desc) {
    std::vector<FilterTarget> entry;
    for (const auto& t : targets) {
      if (t.time_range_s >= range) entry.push_back(t);
    }
    plan.cumulative_targets.push_back(std::move(entry));
  }
  return plan;
}

FEGraph partition_chains(const FEGraph& naive_graph) {
  auto chains = collect_chains(naive_graph);

  FEGraph graph;
  graph.nodes.push_back(OpNode{0, SourceOp{}});
  NodeId next = 1;
  struct PendingCompute {
    ComputeOp op;
    std::vector<NodeId> filter_ids;
  };
  std::vector<PendingCompute> pending;

  for (const auto& chain : chains) {
    PendingCompute pc;
    pc.op = chain.compute;
    const auto& target = chain.plan.all_targets().front();
    for (const auto& event_name : chain.retrieve.event_names) {
      NodeId retrieve = next++;
      NodeId decode = next++;
      NodeId filter = next++;
      graph.nodes.push_back(
          OpNode{retrieve, RetrieveOp{{event_name}, chain.retrieve.time_range_s}});
      graph.nodes.push_back(OpNode{decode, DecodeOp{}});
      graph.nodes.push_back(OpNode{filter, FilterOp{build_filter_plan(event_name, {target})}});
      graph.edges.emplace_back(0, retrieve);
      graph.edges.emplace_back(retrieve, decode);
      graph.edges.emplace_back(decode, filter);
      pc.filter_ids.push_back(filter);
    }
    pending.push_back(std::move(pc));
  }

  for (const auto& pc : pending) {
    NodeId compute = next++;
    NodeId sink = next++;
    graph.nodes.push_back(OpNode{compute, pc.op});
    graph.nodes.push_back(OpNode{sink, SinkOp{pc.op.feature_id}});
    for (NodeId filter : pc.filter_ids) graph.edges.emplace_back(filter, compute);
    graph.edges.emplace_back(compute, sink);
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

FEGraph fuse_chains(const FEGraph& partitioned_graph) {
  auto chains = collect_chains(partitioned_graph);

  // Group sub-chains by event name; only identical event names fuse.
  std::map<std::string, std::vector<FilterTarget>> groups;
  std::map<std::string, ComputeOp> computes;
  for (const auto& chain : chains) {
    if (chain.retrieve.event_names.size() != 1) {
      throw_error(Errc::invalid_argument, "fuse_chains expects a partitioned graph");
    }
    groups[chain.retrieve.event_names.front()].push_back(chain.plan.all_targets().front());
    computes.emplace(chain.compute.feature_id, chain.compute);
  }

  FEGraph graph;
  graph.nodes.push_back(OpNode{0, SourceOp{}});
  NodeId next = 1;
  std::map<std::string, std::vector<NodeId>> feature_inputs;  // feature -> filter nodes

  for (const auto& [event_name, targets] : groups) {
    std::int64_t max_range = 0;
    for (const auto& t : targets) max_range = std::max(max_range, t.time_range_s);

    NodeId retrieve = next++;
    NodeId decode = next++;
    NodeId filter = next++;
    graph.nodes.push_back(OpNode{retrieve, RetrieveOp{{event_name}, max_range}});
    graph.nodes.push_back(OpNode{decode, DecodeOp{}});
    auto plan = build_filter_plan(event_name, targets);
    for (const auto& t : plan.all_targets()) feature_inputs[t.feature_id].push_back(filter);
    graph.nodes.push_back(OpNode{filter, FilterOp{std::move(plan)}});
    graph.edges.emplace_back(0, retrieve);
    graph.edges.emplace_back(retrieve, decode);
    graph.edges.emplace_back(decode, filter);
  }

  for (const auto& [feature_id, op] : computes) {
    NodeId compute = next++;
    NodeId sink = next++;
    graph.nodes.push_back(OpNode{compute, op});
    graph.nodes.push_back(OpNode{sink, SinkOp{feature_id}});
    for (NodeId filter : feature_inputs.at(feature_id)) graph.edges.emplace_back(filter, compute);
    graph.edges.emplace_back(compute, sink);
  }
  std::sort(graph.edges.begin(), graph.edges.end());
  return graph;
}

FEGraph optimize(const ModelSpec& spec) {
  return fuse_chains(partition_chains(build_naive_graph(spec)));
}

}  // namespace fexgraph
