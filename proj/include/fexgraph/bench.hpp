#pragma once

#include <filesystem>
#include <optional>

#include "fexgraph/executor.hpp"
#include "fexgraph/workload.hpp"

namespace fexgraph {

enum class BenchMode { naive, fused, cache_only, full };

const char* bench_mode_name(BenchMode mode);
std::optional<BenchMode> bench_mode_from_name(std::string_view name);
std::vector<BenchMode> parse_mode_list(const std::string& csv);
EngineOptions engine_options_for(BenchMode mode, const EngineOptions& base);

struct RequestRecord {
  std::int64_t request_time_ms = 0;
  OpStats stats;
  double abstract_cost_units = 0;
};

struct ModeReport {
  BenchMode mode = BenchMode::naive;
  std::vector<RequestRecord> requests;
  double total_wall_ns = 0;
  double total_abstract_cost = 0;

  double mean_wall_ns() const;
  double mean_abstract_cost() const;
  // Fraction of processed rows served from cache, ignoring the cold first
  // request: hits / (hits + fresh decodes).
  double mean_reused_fraction() const;
};

struct BenchReport {
  std::string model_id;
  double inference_stub_ms = 0;
  bool equivalence_pass = false;
  std::vector<ModeReport> modes;
  Json cache_rows = Json::array();  // type/ratio/kept/bytes from the last full run

  const ModeReport* find_mode(BenchMode mode) const;
  // Speedup of `mode` relative to the naive baseline (>1 is faster).
  double opcount_speedup(BenchMode mode) const;
  double wallclock_speedup(BenchMode mode) const;

  std::string to_table() const;
  Json to_summary_json() const;
  std::string to_request_jsonl() const;
};

// The unoptimized reference: every feature extracted independently with a
// full retrieve, a decode of every row, and a per-feature filter. This is the
// equivalence oracle the optimized modes are checked against.
std::vector<ExtractionResult> run_naive_baseline(const ModelSpec& spec, EventLog& log,
                                                 const std::vector<std::int64_t>& schedule,
                                                 const EngineOptions& base_options = {});

// Execute every requested mode over the identical log and schedule, verify
// cross-mode value equality per request, and aggregate counters. Throws
// EquivalenceFailure (with the first mismatching feature) if any mode
// disagrees with the first one.
BenchReport run_benchmark(const ModelSpec& spec, EventLog& log,
                          const std::vector<std::int64_t>& schedule,
                          const std::vector<BenchMode>& modes, const EngineOptions& base_options);

// Writes report.txt, requests.jsonl and summary.json under `dir`.
void write_report(const std::filesystem::path& dir, const BenchReport& report);

struct SweepPoint {
  double param_value = 0;
  double opcount_speedup = 0;
  double wallclock_speedup = 0;
  double naive_cost = 0;
  double optimized_cost = 0;
};

// Sweep the feature-set redundancy level at a fixed request interval. The
// trace is shared across points (it does not depend on the feature set) and
// feature generation is sample-coupled, so points differ only through the
// redundancy knob. Speedups average over `seeds` generator seeds.
std::vector<SweepPoint> run_redundancy_sweep(const WorkloadScenario& base,
                                             const std::vector<double>& levels, int seeds,
                                             const EngineOptions& base_options);

// Sweep the request interval at a fixed redundancy level; same trace across
// points per seed.
std::vector<SweepPoint> run_interval_sweep(const WorkloadScenario& base,
                                           const std::vector<double>& intervals_s, int seeds,
                                           const EngineOptions& base_options);

std::string sweep_to_csv(const std::string& param_name, const std::vector<SweepPoint>& points);

// Unique scratch file removed on destruction; benchmarks ingest traces into
// throwaway logs.
class ScopedTempFile {
 public:
  explicit ScopedTempFile(const std::string& tag);
  ~ScopedTempFile();
  ScopedTempFile(const ScopedTempFile&) = delete;
  ScopedTempFile& operator=(const ScopedTempFile&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace fexgraph
