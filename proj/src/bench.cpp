#include "fexgraph/bench.hpp"

#include <unistd.h>

#include <atomic>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "fexgraph/errors.hpp"

namespace fexgraph {

const char* bench_mode_name(BenchMode mode) {
  switch (mode) {
    case BenchMode::naive: return "naive";
    case BenchMode::fused: return "fused";
    case BenchMode::cache_only: return "cache";
    case BenchMode::full: return "full";
  }
  return "?";
}

std::optional<BenchMode> bench_mode_from_name(std::string_view name) {
  if (name == "naive") return BenchMode::naive;
  if (name == "fused") return BenchMode::fused;
  if (name == "cache" || name == "cache_only") return BenchMode::cache_only;
  if (name == "full") return BenchMode::full;
  return std::nullopt;
}

std::vector<BenchMode> parse_mode_list(const std::string& csv) {
  std::vector<BenchMode> modes;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) continue;
    auto mode = bench_mode_from_name(token);
    if (!mode) throw_error(Errc::invalid_argument, "unknown mode '" + token + "'");
    modes.push_back(*mode);
  }
  if (modes.empty()) throw_error(Errc::invalid_argument, "empty mode list");
  return modes;
}

EngineOptions engine_options_for(BenchMode mode, const EngineOptions& base) {
  EngineOptions opts = base;
  opts.fuse = mode == BenchMode::fused || mode == BenchMode::full;
  opts.cache = mode == BenchMode::cache_only || mode == BenchMode::full;
  return opts;
}

double ModeReport::mean_wall_ns() const {
  return requests.empty() ? 0 : total_wall_ns / static_cast<double>(requests.size());
}

double ModeReport::mean_abstract_cost() const {
  return requests.empty() ? 0 : total_abstract_cost / static_cast<double>(requests.size());
}

double ModeReport::mean_reused_fraction() const {
  std::uint64_t hits = 0;
  std::uint64_t fresh = 0;
  for (std::size_t i = 1; i < requests.size(); ++i) {
    hits += requests[i].stats.cache_hit_rows;
    fresh += requests[i].stats.decode_calls;
  }
  const std::uint64_t total = hits + fresh;
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

const ModeReport* BenchReport::find_mode(BenchMode mode) const {
  for (const auto& m : modes) {
    if (m.mode == mode) return &m;
  }
  return nullptr;
}

double BenchReport::opcount_speedup(BenchMode mode) const {
  const auto* naive = find_mode(BenchMode::naive);
  const auto* target = find_mode(mode);
  if (naive == nullptr || target == nullptr || target->total_abstract_cost <= 0) return 0;
  return naive->total_abstract_cost / target->total_abstract_cost;
}

double BenchReport::wallclock_speedup(BenchMode mode) const {
  const auto* naive = find_mode(BenchMode::naive);
  const auto* target = find_mode(mode);
  if (naive == nullptr || target == nullptr || target->total_wall_ns <= 0) return 0;
  return naive->total_wall_ns / target->total_wall_ns;
}

namespace {

std::string diff_message(const std::string& feature_id, std::int64_t request_time_ms,
                         BenchMode reference, BenchMode mode, const std::string& lhs,
                         const std::string& rhs) {
  std::ostringstream out;
  out << "feature '" << feature_id << "' at request " << request_time_ms << ": "
      << bench_mode_name(reference) << "=" << lhs << " vs " << bench_mode_name(mode) << "=" << rhs;
  return out.str();
}

}  // namespace

std::vector<ExtractionResult> run_naive_baseline(const ModelSpec& spec, EventLog& log,
                                                 const std::vector<std::int64_t>& schedule,
                                                 const EngineOptions& base_options) {
  Engine engine(spec, log, engine_options_for(BenchMode::naive, base_options));
  std::vector<ExtractionResult> results;
  results.reserve(schedule.size());
  for (std::int64_t t : schedule) results.push_back(engine.extract(t));
  return results;
}

BenchReport run_benchmark(const ModelSpec& spec_in, EventLog& log,
                          const std::vector<std::int64_t>& schedule,
                          const std::vector<BenchMode>& modes,
                          const EngineOptions& base_options) {
  const ModelSpec spec = normalize(spec_in);
  std::map<std::string, CompFuncKind> func_by_feature;
  for (const auto& f : spec.features) func_by_feature[f.feature_id] = f.comp_func.kind;

  BenchReport report;
  report.model_id = spec.model_id;
  report.inference_stub_ms = spec.inference_stub_ms;

  std::vector<std::vector<ExtractionResult>> results(modes.size());
  for (std::size_t mi = 0; mi < modes.size(); ++mi) {
    Engine engine(spec, log, engine_options_for(modes[mi], base_options));
    ModeReport mode_report;
    mode_report.mode = modes[mi];
    for (std::int64_t t : schedule) {
      auto result = engine.extract(t);
      RequestRecord record;
      record.request_time_ms = t;
      record.stats = result.stats;
      record.abstract_cost_units = abstract_cost(result.stats);
      mode_report.total_wall_ns += static_cast<double>(result.stats.total_ns);
      mode_report.total_abstract_cost += record.abstract_cost_units;
      mode_report.requests.push_back(std::move(record));
      results[mi].push_back(std::move(result));
    }
    if (engine.options().cache) {
      report.cache_rows = cache_summary_rows(engine.cache_state(), engine.last_plan());
    }
    report.modes.push_back(std::move(mode_report));
  }

  // Hard gate: every mode must agree with the first on every feature of
  // every request before any speedup is meaningful.
  for (std::size_t mi = 1; mi < modes.size(); ++mi) {
    for (std::size_t ri = 0; ri < schedule.size(); ++ri) {
      const auto& ref = results[0][ri];
      const auto& got = results[mi][ri];
      for (const auto& [fid, ref_value] : ref.values) {
        const auto it = got.values.find(fid);
        if (it == got.values.end()) {
          throw_error(Errc::equivalence_failure,
                      diff_message(fid, ref.request_time_ms, modes[0], modes[mi],
                                   ref_value.to_json().dump(), "<absent>"));
        }
        if (!values_equivalent(ref_value, it->second, func_by_feature.at(fid))) {
          throw_error(Errc::equivalence_failure,
                      diff_message(fid, ref.request_time_ms, modes[0], modes[mi],
                                   ref_value.to_json().dump(), it->second.to_json().dump()));
        }
      }
      if (ref.feature_errors != got.feature_errors) {
        throw_error(Errc::equivalence_failure,
                    diff_message("<errors>", ref.request_time_ms, modes[0], modes[mi],
                                 Json(ref.feature_errors).dump(), Json(got.feature_errors).dump()));
      }
    }
  }
  report.equivalence_pass = true;
  return report;
}

std::string BenchReport::to_table() const {
  std::ostringstream out;
  out << "model " << model_id << "  (equivalence " << (equivalence_pass ? "PASS" : "FAIL") << ")\n";
  out << std::left << std::setw(8) << "mode" << std::right << std::setw(10) << "requests"
      << std::setw(16) << "rows_retr" << std::setw(14) << "decodes" << std::setw(12) << "hits"
      << std::setw(16) << "filter_cmps" << std::setw(16) << "op_cost" << std::setw(14)
      << "wall_ms" << std::setw(12) << "speedup";
  if (inference_stub_ms > 0) out << std::setw(14) << "e2e_ms(stub)";
  out << '\n';
  for (const auto& m : modes) {
    OpStats total;
    for (const auto& r : m.requests) total += r.stats;
    out << std::left << std::setw(8) << bench_mode_name(m.mode) << std::right << std::setw(10)
        << m.requests.size() << std::setw(16) << total.rows_retrieved << std::setw(14)
        << total.decode_calls << std::setw(12) << total.cache_hit_rows << std::setw(16)
        << total.filter_threshold_comparisons << std::setw(16) << std::fixed
        << std::setprecision(0) << m.total_abstract_cost << std::setw(14) << std::setprecision(3)
        << m.total_wall_ns / 1e6 << std::setw(12) << std::setprecision(2)
        << (m.mode == BenchMode::naive ? 1.0
                                       : const_cast<BenchReport*>(this)->opcount_speedup(m.mode));
    if (inference_stub_ms > 0) {
      out << std::setw(14) << std::setprecision(3)
          << m.total_wall_ns / 1e6 + inference_stub_ms * static_cast<double>(m.requests.size());
    }
    out << '\n';
  }
  return out.str();
}

Json BenchReport::to_summary_json() const {
  Json modes_json = Json::array();
  for (const auto& m : modes) {
    OpStats total;
    for (const auto& r : m.requests) total += r.stats;
    modes_json.push_back(Json{{"mode", bench_mode_name(m.mode)},
                              {"requests", m.requests.size()},
                              {"totals", total.to_json()},
                              {"total_abstract_cost", m.total_abstract_cost},
                              {"total_wall_ns", m.total_wall_ns},
                              {"opcount_speedup_vs_naive", opcount_speedup(m.mode)},
                              {"wallclock_speedup_vs_naive", wallclock_speedup(m.mode)},
                              {"mean_reused_fraction", m.mean_reused_fraction()}});
  }
  return Json{{"model_id", model_id},
              {"equivalence", equivalence_pass ? "PASS" : "FAIL"},
              {"inference_stub_ms", inference_stub_ms},
              {"modes", std::move(modes_json)},
              {"cache_rows", cache_rows}};
}

std::string BenchReport::to_request_jsonl() const {
  std::ostringstream out;
  for (const auto& m : modes) {
    for (const auto& r : m.requests) {
      out << Json{{"mode", bench_mode_name(m.mode)},
                  {"request_time_ms", r.request_time_ms},
                  {"abstract_cost", r.abstract_cost_units},
                  {"stats", r.stats.to_json()}}
                 .dump()
          << '\n';
    }
  }
  return out.str();
}

void write_report(const std::filesystem::path& dir, const BenchReport& report) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.txt", std::ios::trunc);
    out << report.to_table();
  }
  {
    std::ofstream out(dir / "requests.jsonl", std::ios::trunc);
    out << report.to_request_jsonl();
  }
  {
    std::ofstream out(dir / "summary.json", std::ios::trunc);
    out << report.to_summary_json().dump(2) << '\n';
  }
}

namespace {

SweepPoint average_point(double value, const std::vector<BenchReport>& reports) {
  SweepPoint point;
  point.param_value = value;
  for (const auto& report : reports) {
    point.opcount_speedup += report.opcount_speedup(BenchMode::full);
    point.wallclock_speedup += report.wallclock_speedup(BenchMode::full);
    point.naive_cost += report.find_mode(BenchMode::naive)->total_abstract_cost;
    point.optimized_cost += report.find_mode(BenchMode::full)->total_abstract_cost;
  }
  const auto n = static_cast<double>(reports.size());
  point.opcount_speedup /= n;
  point.wallclock_speedup /= n;
  point.naive_cost /= n;
  point.optimized_cost /= n;
  return point;
}

}  // namespace

std::vector<SweepPoint> run_redundancy_sweep(const WorkloadScenario& base,
                                             const std::vector<double>& levels, int seeds,
                                             const EngineOptions& base_options) {
  std::vector<SweepPoint> points;
  const std::vector<BenchMode> modes{BenchMode::naive, BenchMode::full};
  for (double level : levels) {
    std::vector<BenchReport> reports;
    for (int s = 0; s < seeds; ++s) {
      WorkloadScenario scenario = base;
      scenario.seed = base.seed + static_cast<std::uint64_t>(s);
      scenario.features.redundancy_level = level;

      ScopedTempFile log_file("sweep_red");
      EventLog log = EventLog::open(log_file.path());
      ingest_trace(log, generate_trace(scenario));  // trace independent of level

      auto spec = generate_model_spec(scenario);
      reports.push_back(run_benchmark(spec, log, request_schedule(scenario), modes, base_options));
    }
    points.push_back(average_point(level, reports));
  }
  return points;
}

std::vector<SweepPoint> run_interval_sweep(const WorkloadScenario& base,
                                           const std::vector<double>& intervals_s, int seeds,
                                           const EngineOptions& base_options) {
  std::vector<SweepPoint> points;
  const std::vector<BenchMode> modes{BenchMode::naive, BenchMode::full};
  for (double interval : intervals_s) {
    std::vector<BenchReport> reports;
    for (int s = 0; s < seeds; ++s) {
      WorkloadScenario scenario = base;
      scenario.seed = base.seed + static_cast<std::uint64_t>(s);
      scenario.schedule.kind = Schedule::Kind::fixed;
      scenario.schedule.interval_s = interval;

      ScopedTempFile log_file("sweep_int");
      EventLog log = EventLog::open(log_file.path());
      ingest_trace(log, generate_trace(scenario));

      auto spec = generate_model_spec(scenario);
      reports.push_back(run_benchmark(spec, log, request_schedule(scenario), modes, base_options));
    }
    points.push_back(average_point(interval, reports));
  }
  return points;
}

std::string sweep_to_csv(const std::string& param_name, const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << param_name << ",opcount_speedup,wallclock_speedup,naive_cost,optimized_cost\n";
  for (const auto& p : points) {
    out << p.param_value << ',' << p.opcount_speedup << ',' << p.wallclock_speedup << ','
        << p.naive_cost << ',' << p.optimized_cost << '\n';
  }
  return out.str();
}

ScopedTempFile::ScopedTempFile(const std::string& tag) {
  static std::atomic<std::uint64_t> counter{0};
  const auto n = counter.fetch_add(1);
  path_ = std::filesystem::temp_directory_path() /
          ("fexgraph_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(n) + ".log");
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

ScopedTempFile::~ScopedTempFile() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace fexgraph
