#include "fexgraph/decode_kernels.hpp"

#include "fexgraph/errors.hpp"

namespace fexgraph {

namespace {

constexpr std::size_t kParallelGrainRows = 256;

}  // namespace

DecodeBatchResult decode_batch_serial(std::span<const BehaviorEvent> events) {
  DecodeBatchResult result;
  result.rows.reserve(events.size());
  for (const auto& ev : events) {
    try {
      auto attrs = std::make_shared<const AttributeMap>(decode_payload(ev.payload));
      result.rows.push_back(StreamRow{ev.timestamp_ms, ev.event_id, std::move(attrs)});
      ++result.decoded;
      result.payload_bytes += ev.payload.size();
    } catch (const Error&) {
      ++result.malformed;  // garbage rows are skipped, never fatal
    }
  }
  return result;
}

DecodeBatchResult decode_batch_parallel(std::span<const BehaviorEvent> events) {
#ifdef FEXGRAPH_HAVE_OPENMP
  const std::int64_t n = static_cast<std::int64_t>(events.size());
  std::vector<std::shared_ptr<const AttributeMap>> decoded(events.size());

  #pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      decoded[i] = std::make_shared<const AttributeMap>(decode_payload(events[i].payload));
    } catch (const Error&) {
      // leave the slot empty; collected as malformed below
    }
  }

  DecodeBatchResult result;
  result.rows.reserve(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (decoded[i]) {
      result.rows.push_back(
          StreamRow{events[i].timestamp_ms, events[i].event_id, std::move(decoded[i])});
      ++result.decoded;
      result.payload_bytes += events[i].payload.size();
    } else {
      ++result.malformed;
    }
  }
  return result;
#else
  return decode_batch_serial(events);
#endif
}

DecodeBatchResult decode_batch(std::span<const BehaviorEvent> events, bool parallel) {
  if (parallel && events.size() >= kParallelGrainRows) {
    return decode_batch_parallel(events);
  }
  return decode_batch_serial(events);
}

}  // namespace fexgraph
