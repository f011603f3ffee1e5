#include "fexgraph/op_stats.hpp"

namespace fexgraph {

OpStats& OpStats::operator+=(const OpStats& other) {
  rows_retrieved += other.rows_retrieved;
  decode_calls += other.decode_calls;
  malformed_rows += other.malformed_rows;
  filter_threshold_comparisons += other.filter_threshold_comparisons;
  compute_calls += other.compute_calls;
  compute_values += other.compute_values;
  cache_hit_rows += other.cache_hit_rows;
  cache_miss_rows += other.cache_miss_rows;
  decoded_payload_bytes += other.decoded_payload_bytes;
  retrieve_ns += other.retrieve_ns;
  decode_ns += other.decode_ns;
  filter_ns += other.filter_ns;
  compute_ns += other.compute_ns;
  cache_ns += other.cache_ns;
  total_ns += other.total_ns;
  return *this;
}

Json OpStats::to_json() const {
  return Json{{"rows_retrieved", rows_retrieved},
              {"decode_calls", decode_calls},
              {"malformed_rows", malformed_rows},
              {"filter_threshold_comparisons", filter_threshold_comparisons},
              {"compute_calls", compute_calls},
              {"compute_values", compute_values},
              {"cache_hit_rows", cache_hit_rows},
              {"cache_miss_rows", cache_miss_rows},
              {"decoded_payload_bytes", decoded_payload_bytes},
              {"retrieve_ns", retrieve_ns},
              {"decode_ns", decode_ns},
              {"filter_ns", filter_ns},
              {"compute_ns", compute_ns},
              {"cache_ns", cache_ns},
              {"total_ns", total_ns}};
}

double abstract_cost(const OpStats& stats) {
  const double retrieve_decode =
      200.0 * static_cast<double>(stats.decode_calls + stats.malformed_rows) +
      3.0 * static_cast<double>(stats.decoded_payload_bytes);
  const double filter = 10.0 * static_cast<double>(stats.filter_threshold_comparisons);
  const double compute = 20.0 * static_cast<double>(stats.compute_calls) +
                         2.0 * static_cast<double>(stats.compute_values);
  const double cache_touch = 5.0 * static_cast<double>(stats.cache_hit_rows);
  return retrieve_decode + filter + compute + cache_touch;
}

}  // namespace fexgraph
