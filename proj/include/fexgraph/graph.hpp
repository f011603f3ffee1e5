#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fexgraph/feature_spec.hpp"

namespace fexgraph {

using NodeId = std::uint32_t;

// One feature's demand on a fused stream: how far back it looks and which
// attributes it extracts.
struct FilterTarget {
  std::string feature_id;
  std::int64_t time_range_s = 0;
  std::vector<std::string> attr_names;

  bool operator==(const FilterTarget&) const = default;
};

// Precomputed reverse mapping from time-range buckets to cumulative target
// sets. ranges_desc is strictly decreasing; cumulative_targets[k] holds every
// target whose time_range_s >= ranges_desc[k], so entry k's set grows with k
// and the last entry holds all targets exactly once.
struct HierarchicalFilterPlan {
  std::string event_name;  // scope for fused plans; empty for per-feature plans
  std::vector<std::int64_t> ranges_desc;
  std::vector<std::vector<FilterTarget>> cumulative_targets;
  std::vector<std::string> union_attrs;  // sorted

  const std::vector<FilterTarget>& all_targets() const { return cumulative_targets.back(); }

  bool operator==(const HierarchicalFilterPlan&) const = default;
};

struct SourceOp {
  bool operator==(const SourceOp&) const = default;
};
struct RetrieveOp {
  std::vector<std::string> event_names;  // sorted
  std::int64_t time_range_s = 0;
  bool operator==(const RetrieveOp&) const = default;
};
struct DecodeOp {
  bool operator==(const DecodeOp&) const = default;
};
struct FilterOp {
  HierarchicalFilterPlan plan;
  bool operator==(const FilterOp&) const = default;
};
struct ComputeOp {
  std::string feature_id;
  CompFunc func;
  std::vector<std::string> attr_names;
  bool operator==(const ComputeOp&) const = default;
};
struct SinkOp {
  std::string feature_id;
  bool operator==(const SinkOp&) const = default;
};

enum class OpKind { source, retrieve, decode, filter, compute, feature_sink };

const char* op_kind_name(OpKind kind);

struct OpNode {
  NodeId id = 0;
  std::variant<SourceOp, RetrieveOp, DecodeOp, FilterOp, ComputeOp, SinkOp> op;

  OpKind kind() const { return static_cast<OpKind>(op.index()); }

  template <typename T>
  const T& as() const {
    return std::get<T>(op);
  }

  bool operator==(const OpNode&) const = default;
};

// DAG from the log source to feature sinks. Nodes are stored in canonical
// order (source first, then pipeline chains, then computes and sinks), and
// edges sorted by (from, to); dump/load preserve this ordering byte-exactly.
struct FEGraph {
  std::vector<OpNode> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;

  const OpNode& node(NodeId id) const { return nodes.at(id); }
  std::vector<NodeId> children(NodeId id) const;
  std::vector<NodeId> parents(NodeId id) const;

  bool operator==(const FEGraph&) const = default;
};

// Structural invariants: acyclic, exactly one source, every sink reachable
// from it, and every source->sink path ordered source, retrieve, decode,
// filter, compute, sink. Throws ValidationError on violation.
void validate_graph(const FEGraph& graph);

Json graph_to_json(const FEGraph& graph);
FEGraph graph_from_json(const Json& doc);

// Deterministic serialization; `load_graph(dump_graph(g))` is the identity.
std::string dump_graph(const FEGraph& graph);
FEGraph load_graph(const std::string& text);

std::string graph_to_dot(const FEGraph& graph);

}  // namespace fexgraph
