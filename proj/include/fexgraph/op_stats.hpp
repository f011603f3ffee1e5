#pragma once

#include <cstdint>

#include "fexgraph/payload.hpp"

namespace fexgraph {

// Per-request instrumentation. Rows served from cache skip decode, so
// decode_calls + cache_hit_rows equals the rows logically processed and
// rows_retrieved counts only fetches that hit the log.
struct OpStats {
  std::uint64_t rows_retrieved = 0;
  std::uint64_t decode_calls = 0;
  std::uint64_t malformed_rows = 0;
  std::uint64_t filter_threshold_comparisons = 0;
  std::uint64_t compute_calls = 0;
  std::uint64_t compute_values = 0;  // values consumed across all computes
  std::uint64_t cache_hit_rows = 0;
  std::uint64_t cache_miss_rows = 0;
  std::uint64_t decoded_payload_bytes = 0;

  std::uint64_t retrieve_ns = 0;
  std::uint64_t decode_ns = 0;
  std::uint64_t filter_ns = 0;
  std::uint64_t compute_ns = 0;
  std::uint64_t cache_ns = 0;
  std::uint64_t total_ns = 0;

  OpStats& operator+=(const OpStats& other);

  Json to_json() const;
};

// Deterministic cost of one request in abstract nanosecond units, derived
// from counters only. Retrieve+decode dominate per row; cached rows cost a
// merge touch.
double abstract_cost(const OpStats& stats);

}  // namespace fexgraph
