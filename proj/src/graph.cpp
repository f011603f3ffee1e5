#include "fexgraph/graph.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "fexgraph/errors.hpp"

namespace fexgraph {

const char* op_kind_name(OpKind kind) {
  switch (kind) {
    case OpKind::source: return "source";
    case OpKind::retrieve: return "retrieve";
    case OpKind::decode: return "decode";
    case OpKind::filter: return "filter";
    case OpKind::compute: return "compute";
    case OpKind::feature_sink: return "sink";
  }
  return "?";
}

std::vector<NodeId> FEGraph::children(NodeId id) const {
  std::vector<NodeId> out;
  for (const auto& [from, to] : edges) {
    if (from == id) out.push_back(to);
  }
  return out;
}

std::vector<NodeId> FEGraph::parents(NodeId id) const {
  std::vector<NodeId> out;
  for (const auto& [from, to] : edges) {
    if (to == id) out.push_back(from);
  }
  return out;
}

namespace {

[[noreturn]] void graph_error(const std::string& reason) {
  throw_error(Errc::validation_error, "graph: " + reason);
}

int kind_rank(OpKind kind) { return static_cast<int>(kind); }

}  // namespace

void validate_graph(const FEGraph& graph) {
  const std::size_t n = graph.nodes.size();
  if (n == 0) graph_error("empty graph");
  for (std::size_t i = 0; i < n; ++i) {
    if (graph.nodes[i].id != i) graph_error("node ids must be dense and ordered");
  }
  std::size_t sources = 0;
  for (const auto& node : graph.nodes) {
    if (node.kind() == OpKind::source) ++sources;
  }
  if (sources != 1) graph_error("expected exactly one source node");

  std::vector<std::vector<NodeId>> adj(n);
  std::vector<int> indegree(n, 0);
  for (const auto& [from, to] : graph.edges) {
    if (from >= n || to >= n) graph_error("edge references unknown node");
    // Along any path the operator kinds must appear in pipeline order.
    if (kind_rank(graph.nodes[to].kind()) != kind_rank(graph.nodes[from].kind()) + 1) {
      graph_error(std::string("edge ") + op_kind_name(graph.nodes[from].kind()) + "->" +
                  op_kind_name(graph.nodes[to].kind()) + " violates pipeline order");
    }
    adj[from].push_back(to);
    ++indegree[to];
  }

  // Kahn: acyclicity. The kind-rank check above already forbids back edges,
  // but keep the explicit check for graphs built by hand.
  std::vector<NodeId> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) stack.push_back(static_cast<NodeId>(i));
  }
  std::size_t visited = 0;
  auto work = indegree;
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    ++visited;
    for (NodeId next : adj[cur]) {
      if (--work[next] == 0) stack.push_back(next);
    }
  }
  if (visited != n) graph_error("cycle detected");

  // Reachability of every sink from the source.
  std::vector<bool> reach(n, false);
  std::function<void(NodeId)> dfs = [&](NodeId v) {
    if (reach[v]) return;
    reach[v] = true;
    for (NodeId next : adj[v]) dfs(next);
  };
  for (const auto& node : graph.nodes) {
    if (node.kind() == OpKind::source) dfs(node.id);
  }
  for (const auto& node : graph.nodes) {
    if (node.kind() == OpKind::feature_sink && !reach[node.id]) {
      graph_error("sink " + node.as<SinkOp>().feature_id + " unreachable from source");
    }
    if (node.kind() != OpKind::source && graph.parents(node.id).empty()) {
      graph_error("node " + std::to_string(node.id) + " has no parent");
    }
    if (node.kind() != OpKind::feature_sink && graph.children(node.id).empty()) {
      graph_error("node " + std::to_string(node.id) + " has no child");
    }
  }
}

namespace {

Json plan_to_json(const HierarchicalFilterPlan& plan) {
  Json cumulative = Json::array();
  for (const auto& entry : plan.cumulative_targets) {
    Json targets = Json::array();
    for (const auto& t : entry) {
      targets.push_back(Json{{"feature_id", t.feature_id},
                             {"time_range_s", t.time_range_s},
                             {"attrs", t.attr_names}});
    }
    cumulative.push_back(std::move(targets));
  }
  return Json{{"event_name", plan.event_name},
              {"ranges_desc", plan.ranges_desc},
              {"cumulative_targets", std::move(cumulative)},
              {"union_attrs", plan.union_attrs}};
}

HierarchicalFilterPlan plan_from_json(const Json& j) {
  HierarchicalFilterPlan plan;
  plan.event_name = j.at("event_name").get<std::string>();
  plan.ranges_desc = j.at("ranges_desc").get<std::vector<std::int64_t>>();
  for (const auto& entry : j.at("cumulative_targets")) {
    std::vector<FilterTarget> targets;
    for (const auto& tj : entry) {
      targets.push_back(FilterTarget{tj.at("feature_id").get<std::string>(),
                                     tj.at("time_range_s").get<std::int64_t>(),
                                     tj.at("attrs").get<std::vector<std::string>>()});
    }
    plan.cumulative_targets.push_back(std::move(targets));
  }
  plan.union_attrs = j.at("union_attrs").get<std::vector<std::string>>();
  if (plan.ranges_desc.empty() || plan.ranges_desc.size() != plan.cumulative_targets.size()) {
    throw_error(Errc::parse_error, "filter plan shape mismatch");
  }
  return plan;
}

}  // namespace

Json graph_to_json(const FEGraph& graph) {
  Json nodes = Json::array();
  for (const auto& node : graph.nodes) {
    Json nj{{"id", node.id}, {"kind", op_kind_name(node.kind())}};
    switch (node.kind()) {
      case OpKind::retrieve: {
        const auto& op = node.as<RetrieveOp>();
        nj["event_names"] = op.event_names;
        nj["time_range_s"] = op.time_range_s;
        break;
      }
      case OpKind::filter:
        nj["plan"] = plan_to_json(node.as<FilterOp>().plan);
        break;
      case OpKind::compute: {
        const auto& op = node.as<ComputeOp>();
        nj["feature_id"] = op.feature_id;
        nj["func"] = comp_func_name(op.func.kind);
        if (op.func.concat_limit) nj["concat_limit"] = *op.func.concat_limit;
        nj["attrs"] = op.attr_names;
        break;
      }
      case OpKind::feature_sink:
        nj["feature_id"] = node.as<SinkOp>().feature_id;
        break;
      default:
        break;
    }
    nodes.push_back(std::move(nj));
  }
  Json edges = Json::array();
  auto sorted_edges = graph.edges;
  std::sort(sorted_edges.begin(), sorted_edges.end());
  for (const auto& [from, to] : sorted_edges) edges.push_back(Json::array({from, to}));
  return Json{{"format", "fe-graph-v1"}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

FEGraph graph_from_json(const Json& doc) {
  FEGraph graph;
  try {
    if (doc.at("format").get<std::string>() != "fe-graph-v1") {
      throw_error(Errc::parse_error, "unknown graph format");
    }
    for (const auto& nj : doc.at("nodes")) {
      OpNode node;
      node.id = nj.at("id").get<NodeId>();
      std::string kind = nj.at("kind").get<std::string>();
      if (kind == "source") {
        node.op = SourceOp{};
      } else if (kind == "retrieve") {
        node.op = RetrieveOp{nj.at("event_names").get<std::vector<std::string>>(),
                             nj.at("time_range_s").get<std::int64_t>()};
      } else if (kind == "decode") {
        node.op = DecodeOp{};
      } else if (kind == "filter") {
        node.op = FilterOp{plan_from_json(nj.at("plan"))};
      } else if (kind == "compute") {
        ComputeOp op;
        op.feature_id = nj.at("feature_id").get<std::string>();
        auto func = comp_func_from_name(nj.at("func").get<std::string>());
        if (!func) throw_error(Errc::parse_error, "unknown comp_func in graph");
        op.func.kind = *func;
        if (nj.contains("concat_limit")) {
          op.func.concat_limit = nj.at("concat_limit").get<std::uint32_t>();
        }
        op.attr_names = nj.at("attrs").get<std::vector<std::string>>();
        node.op = std::move(op);
      } else if (kind == "sink") {
        node.op = SinkOp{nj.at("feature_id").get<std::string>()};
      } else {
        throw_error(Errc::parse_error, "unknown node kind '" + kind + "'");
      }
      graph.nodes.push_back(std::move(node));
    }
    for (const auto& ej : doc.at("edges")) {
      graph.edges.emplace_back(ej.at(0).get<NodeId>(), ej.at(1).get<NodeId>());
    }
  } catch (const Json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  validate_graph(graph);
  return graph;
}

std::string dump_graph(const FEGraph& graph) { return graph_to_json(graph).dump(2) + "\n"; }

FEGraph load_graph(const std::string& text) {
  Json doc = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw_error(Errc::parse_error, "graph dump is not valid JSON");
  return graph_from_json(doc);
}

std::string graph_to_dot(const FEGraph& graph) {
  std::ostringstream out;
  out << "digraph fe_graph {\n  rankdir=LR;\n  node [shape=box, fontsize=10];\n";
  for (const auto& node : graph.nodes) {
    std::string label = op_kind_name(node.kind());
    switch (node.kind()) {
      case OpKind::retrieve: {
        const auto& op = node.as<RetrieveOp>();
        label += "\\n{";
        for (std::size_t i = 0; i < op.event_names.size(); ++i) {
          if (i) label += ",";
          label += op.event_names[i];
        }
        label += "}\\n" + std::to_string(op.time_range_s) + "s";
        break;
      }
      case OpKind::filter: {
        const auto& plan = node.as<FilterOp>().plan;
        label += "\\n" + std::to_string(plan.all_targets().size()) + " targets, " +
                 std::to_string(plan.ranges_desc.size()) + " ranges";
        break;
      }
      case OpKind::compute: {
        const auto& op = node.as<ComputeOp>();
        label += "\\n" + std::string(comp_func_name(op.func.kind)) + "\\n" + op.feature_id;
        break;
      }
      case OpKind::feature_sink:
        label += "\\n" + node.as<SinkOp>().feature_id;
        break;
      default:
        break;
    }
    out << "  n" << node.id << " [label=\"" << label << "\"];\n";
  }
  auto sorted_edges = graph.edges;
  std::sort(sorted_edges.begin(), sorted_edges.end());
  for (const auto& [from, to] : sorted_edges) {
    out << "  n" << from << " -> n" << to << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace fexgraph
