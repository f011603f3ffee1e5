#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fexgraph/event_log.hpp"
#include "fexgraph/feature_spec.hpp"

namespace fexgraph {

// Tiny deterministic RNG helpers over mt19937_64; distributions are
// hand-rolled so traces are reproducible independent of the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  double uniform();                                  // [0, 1)
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);  // inclusive
  double exponential(double rate);                   // mean 1/rate
  std::size_t zipf(std::size_t n, double exponent);  // rank in [0, n)

 private:
  std::uint64_t splitmix();
  std::uint64_t state_;
};

struct EventTypeSpec {
  std::string name;
  double rate_per_s = 0;  // Poisson arrival rate
  int numeric_attrs = 2;
  int text_attrs = 1;
  int pad_min_bytes = 0;  // uniform payload padding range
  int pad_max_bytes = 0;
};

struct FeatureGenParams {
  int count = 10;
  int event_types_used = 0;  // 0 => all scenario types
  double redundancy_level = 0.5;
  std::vector<std::int64_t> range_vocab_s = {60, 300, 3600, 86400};
  double multi_event_prob = 0.15;
  double zipf_exponent = 1.1;
};

struct Schedule {
  enum class Kind { fixed, burst };
  Kind kind = Kind::fixed;
  double interval_s = 60;
  // burst pattern: burst_len requests spaced intra_gap_s, bursts every inter_gap_s
  int burst_len = 5;
  double intra_gap_s = 5;
  double inter_gap_s = 300;
};

struct WorkloadScenario {
  std::string model_id = "model";
  std::uint64_t seed = 1;
  std::int64_t duration_s = 3600;
  std::int64_t start_ms = 1'700'000'000'000;
  std::vector<EventTypeSpec> event_types;
  FeatureGenParams features;
  Schedule schedule;
  std::uint64_t cache_budget_bytes = 1 << 20;
  double inference_stub_ms = 0;
};

WorkloadScenario parse_scenario(const std::string& document);
WorkloadScenario load_scenario(const std::filesystem::path& path);
std::string serialize_scenario(const WorkloadScenario& scenario);

struct TraceEvent {
  std::int64_t timestamp_ms = 0;
  std::string event_name;
  AttributeMap payload;

  bool operator==(const TraceEvent&) const = default;
};

// Per-type Poisson arrivals merged into one globally time-sorted trace;
// byte-identical for a fixed seed.
std::vector<TraceEvent> generate_trace(const WorkloadScenario& scenario);

// Newline-delimited records with fields (timestamp_ms, event_name, payload).
void write_trace(const std::filesystem::path& path, const std::vector<TraceEvent>& trace);
std::vector<TraceEvent> read_trace(const std::filesystem::path& path);

void ingest_trace(EventLog& log, const std::vector<TraceEvent>& trace);

// Synthesize the feature set for a scenario. Event types are assigned with a
// Zipf skew (every used type gets at least one feature); with probability
// redundancy_level a feature's time range is drawn from the pool of ranges
// already assigned to features of its primary type, otherwise a fresh
// "periodic" range (vocabulary base times a small multiplier) is drawn.
// Random draws are consumed identically regardless of the redundancy level,
// so sweeps over the level are coupled sample-by-sample.
ModelSpec generate_model_spec(const WorkloadScenario& scenario);

// Request times implied by the scenario's schedule over the trace span.
std::vector<std::int64_t> request_schedule(const WorkloadScenario& scenario);

}  // namespace fexgraph
