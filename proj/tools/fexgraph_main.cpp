// fexgraph: workload generation, graph optimization and benchmark harness.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fexgraph/bench.hpp"
#include "fexgraph/errors.hpp"
#include "fexgraph/graph_builder.hpp"
#include "fexgraph/graph_optimizer.hpp"

namespace {

using namespace fexgraph;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_error(Errc::storage_failure, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_error(Errc::storage_failure, "cannot write " + path);
  out << content;
}

// "60s", "5m", "1h" or plain seconds.
double parse_interval_s(const std::string& text) {
  if (text.empty()) throw_error(Errc::invalid_argument, "empty interval");
  double scale = 1.0;
  std::string digits = text;
  switch (text.back()) {
    case 's': scale = 1.0; digits.pop_back(); break;
    case 'm': scale = 60.0; digits.pop_back(); break;
    case 'h': scale = 3600.0; digits.pop_back(); break;
    default: break;
  }
  try {
    return std::stod(digits) * scale;
  } catch (const std::exception&) {
    throw_error(Errc::invalid_argument, "bad interval '" + text + "'");
  }
}

// Either "start:stop:step" (inclusive) or a comma list.
std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  if (text.find(':') != std::string::npos) {
    double start = 0, stop = 0, step = 0;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0) {
      throw_error(Errc::invalid_argument, "bad range '" + text + "'");
    }
    for (double v = start; v <= stop + 1e-9; v += step) values.push_back(v);
  } else {
    std::stringstream ss(text);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (!token.empty()) values.push_back(std::stod(token));
    }
  }
  if (values.empty()) throw_error(Errc::invalid_argument, "no sweep values");
  return values;
}

void dump_graph_file(const FEGraph& graph, const std::string& path) {
  if (path.size() >= 4 && path.substr(path.size() - 4) == ".dot") {
    write_file(path, graph_to_dot(graph));
  } else {
    write_file(path, dump_graph(graph));
  }
}

int cmd_gen(const std::string& scenario_path, const std::string& out_path,
            const std::string& out_spec_path) {
  auto scenario = load_scenario(scenario_path);
  auto trace = generate_trace(scenario);
  write_trace(out_path, trace);
  std::cout << "wrote " << trace.size() << " events to " << out_path << "\n";
  if (!out_spec_path.empty()) {
    auto spec = generate_model_spec(scenario);
    write_file(out_spec_path, serialize_model_spec(spec));
    std::cout << "wrote " << spec.features.size() << " features to " << out_spec_path << "\n";
  }
  return 0;
}

int cmd_optimize(const std::string& spec_path, const std::string& before_path,
                 const std::string& after_path, const std::string& redundancy_path) {
  auto spec = normalize(parse_model_spec(read_file(spec_path)));
  auto naive = build_naive_graph(spec);
  auto optimized = optimize(spec);
  validate_graph(naive);
  validate_graph(optimized);

  if (!before_path.empty()) dump_graph_file(naive, before_path);
  if (!after_path.empty()) dump_graph_file(optimized, after_path);

  auto report = identify_redundancy(spec);
  std::cout << report.to_table();
  if (!redundancy_path.empty()) write_file(redundancy_path, report.to_csv());

  std::size_t naive_retrieves = 0;
  std::size_t fused_retrieves = 0;
  for (const auto& n : naive.nodes) {
    if (n.kind() == OpKind::retrieve) ++naive_retrieves;
  }
  for (const auto& n : optimized.nodes) {
    if (n.kind() == OpKind::retrieve) ++fused_retrieves;
  }
  std::cout << "chains: " << naive_retrieves << " -> fused groups: " << fused_retrieves << "\n";
  return 0;
}

int cmd_bench(const std::string& spec_path, const std::string& trace_path,
              const std::string& modes_csv, const std::string& interval_text,
              const std::string& report_dir, const EngineOptions& opts) {
  auto spec = normalize(parse_model_spec(read_file(spec_path)));
  auto trace = read_trace(trace_path);
  if (trace.empty()) throw_error(Errc::invalid_argument, "trace is empty");

  ScopedTempFile log_file("bench");
  EventLog log = EventLog::open(log_file.path());
  ingest_trace(log, trace);

  const auto interval_ms = static_cast<std::int64_t>(parse_interval_s(interval_text) * 1000.0);
  if (interval_ms <= 0) throw_error(Errc::invalid_argument, "interval must be positive");
  std::vector<std::int64_t> schedule;
  const std::int64_t start = trace.front().timestamp_ms;
  const std::int64_t end = trace.back().timestamp_ms;
  for (std::int64_t t = start + interval_ms; t <= end; t += interval_ms) schedule.push_back(t);
  if (schedule.empty()) schedule.push_back(end);

  auto report = run_benchmark(spec, log, schedule, parse_mode_list(modes_csv), opts);
  std::cout << report.to_table();
  if (!report_dir.empty()) {
    write_report(report_dir, report);
    std::cout << "report written to " << report_dir << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& scenario_path, const std::string& param,
              const std::string& values_text, int seeds, const std::string& interval_text,
              const std::string& out_csv, const EngineOptions& opts) {
  auto scenario = load_scenario(scenario_path);
  auto values = parse_values(values_text);
  std::vector<SweepPoint> points;
  if (param == "redundancy") {
    if (!interval_text.empty()) {
      scenario.schedule.kind = Schedule::Kind::fixed;
      scenario.schedule.interval_s = parse_interval_s(interval_text);
    }
    points = run_redundancy_sweep(scenario, values, seeds, opts);
  } else if (param == "interval") {
    points = run_interval_sweep(scenario, values, seeds, opts);
  } else {
    throw_error(Errc::invalid_argument, "sweep param must be 'redundancy' or 'interval'");
  }
  auto csv = sweep_to_csv(param, points);
  std::cout << csv;
  if (!out_csv.empty()) write_file(out_csv, csv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"feature extraction graph engine"};
  app.require_subcommand(1);

  EngineOptions opts;
  opts.cost_mode = cost_mode_from_env();
  bool wallclock = false;
  app.add_flag("--parallel", opts.parallel, "parallelize decode and group execution (OpenMP)");
  app.add_flag("--wallclock", wallclock,
               "profile costs by wall clock instead of the abstract model");

  auto* gen = app.add_subcommand("gen", "generate a synthetic trace (and feature spec)");
  std::string scenario_path, out_path, out_spec_path;
  gen->add_option("--scenario", scenario_path, "scenario file")->required();
  gen->add_option("--out", out_path, "output trace file")->required();
  gen->add_option("--out-spec", out_spec_path, "also write the generated model spec");

  auto* optimize_cmd = app.add_subcommand("optimize", "compile a model spec and dump graphs");
  std::string spec_path, before_path, after_path, redundancy_path;
  optimize_cmd->add_option("--spec", spec_path, "model spec file")->required();
  optimize_cmd->add_option("--dump-before", before_path, "unoptimized graph (.dot or .json)");
  optimize_cmd->add_option("--dump-after", after_path, "optimized graph (.dot or .json)");
  optimize_cmd->add_option("--redundancy", redundancy_path, "pairwise redundancy CSV");

  auto* bench = app.add_subcommand("bench", "run baselines and ablations over one trace");
  std::string bench_spec, trace_path, modes_csv = "naive,fused,cache,full", interval = "60s",
              report_dir;
  bench->add_option("--spec", bench_spec, "model spec file")->required();
  bench->add_option("--trace", trace_path, "trace file")->required();
  bench->add_option("--modes", modes_csv, "comma list of naive,fused,cache,full");
  bench->add_option("--interval", interval, "request interval (e.g. 60s, 5m)");
  bench->add_option("--report", report_dir, "directory for report files");

  auto* sweep = app.add_subcommand("sweep", "sweep redundancy level or request interval");
  std::string sweep_scenario, sweep_param, sweep_values, sweep_interval, sweep_csv;
  int sweep_seeds = 3;
  sweep->add_option("--scenario", sweep_scenario, "base scenario file")->required();
  sweep->add_option("--param", sweep_param, "redundancy | interval")->required();
  sweep->add_option("--values", sweep_values, "start:stop:step or comma list")->required();
  sweep->add_option("--seeds", sweep_seeds, "generator seeds per point");
  sweep->add_option("--interval", sweep_interval, "fixed interval for redundancy sweeps");
  sweep->add_option("--out", sweep_csv, "output CSV path");

  CLI11_PARSE(app, argc, argv);
  if (wallclock) opts.cost_mode = fexgraph::CostMode::wallclock;

  try {
    if (gen->parsed()) return cmd_gen(scenario_path, out_path, out_spec_path);
    if (optimize_cmd->parsed()) {
      return cmd_optimize(spec_path, before_path, after_path, redundancy_path);
    }
    if (bench->parsed()) {
      return cmd_bench(bench_spec, trace_path, modes_csv, interval, report_dir, opts);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sweep_scenario, sweep_param, sweep_values, sweep_seeds, sweep_interval,
                       sweep_csv, opts);
    }
  } catch (const fexgraph::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
