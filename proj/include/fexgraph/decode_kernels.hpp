#pragma once

#include <span>

#include "fexgraph/event_log.hpp"
#include "fexgraph/filtering.hpp"

namespace fexgraph {

struct DecodeBatchResult {
  std::vector<StreamRow> rows;  // input order, malformed rows skipped
  std::uint64_t decoded = 0;
  std::uint64_t malformed = 0;
  std::uint64_t payload_bytes = 0;  // bytes of successfully decoded payloads
};

// Decode a batch of raw events into attribute maps. Per-row work is
// independent, so the parallel path splits the batch across OpenMP threads;
// results are identical to the serial path in content and order.
DecodeBatchResult decode_batch(std::span<const BehaviorEvent> events, bool parallel);

DecodeBatchResult decode_batch_serial(std::span<const BehaviorEvent> events);
DecodeBatchResult decode_batch_parallel(std::span<const BehaviorEvent> events);

}  // namespace fexgraph
