#include "fexgraph/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fexgraph/errors.hpp"

namespace fexgraph {

std::uint64_t Rng::splitmix() {
  state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t Rng::next_u64() { return splitmix(); }

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(next_u64() % span);
}

double Rng::exponential(double rate) { return -std::log1p(-uniform()) / rate; }

std::size_t Rng::zipf(std::size_t n, double exponent) {
  double total = 0;
  for (std::size_t r = 1; r <= n; ++r) total += std::pow(static_cast<double>(r), -exponent);
  double u = uniform() * total;
  for (std::size_t r = 1; r <= n; ++r) {
    u -= std::pow(static_cast<double>(r), -exponent);
    if (u <= 0) return r - 1;
  }
  return n - 1;
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

const char* kWords[] = {"comedy", "drama",  "sports", "news", "music",
                        "travel", "food",   "tech",   "gaming", "diy"};

constexpr double kSnapToSecondProb = 0.25;
constexpr std::int64_t kMaxRangeMultiplier = 6;

void validate_scenario(const WorkloadScenario& s) {
  if (s.duration_s <= 0) throw_error(Errc::validation_error, "duration_s must be positive");
  if (s.event_types.empty()) throw_error(Errc::validation_error, "no event types");
  std::set<std::string> names;
  for (const auto& t : s.event_types) {
    if (t.name.empty()) throw_error(Errc::validation_error, "empty event type name");
    if (!names.insert(t.name).second) {
      throw_error(Errc::validation_error, "duplicate event type '" + t.name + "'");
    }
    if (t.rate_per_s <= 0) {
      throw_error(Errc::validation_error, "rate for '" + t.name + "' must be positive");
    }
    if (t.numeric_attrs < 0 || t.text_attrs < 0 || t.numeric_attrs + t.text_attrs == 0) {
      throw_error(Errc::validation_error, "'" + t.name + "' needs at least one attribute");
    }
    if (t.pad_min_bytes < 0 || t.pad_max_bytes < t.pad_min_bytes) {
      throw_error(Errc::validation_error, "bad pad range for '" + t.name + "'");
    }
  }
  if (s.features.redundancy_level < 0 || s.features.redundancy_level > 1) {
    throw_error(Errc::validation_error, "redundancy_level must lie in [0,1]");
  }
  if (s.features.count <= 0) throw_error(Errc::validation_error, "feature count must be positive");
  if (s.features.range_vocab_s.empty()) {
    throw_error(Errc::validation_error, "range_vocab_s must be non-empty");
  }
  for (auto r : s.features.range_vocab_s) {
    if (r <= 0) throw_error(Errc::validation_error, "range vocabulary entries must be positive");
  }
}

}  // namespace

WorkloadScenario parse_scenario(const std::string& document) {
  Json doc = Json::parse(document, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded()) throw_error(Errc::parse_error, "scenario is not valid JSON");

  WorkloadScenario s;
  try {
    s.model_id = doc.value("model_id", std::string("model"));
    s.seed = doc.value("seed", std::uint64_t{1});
    s.duration_s = doc.at("duration_s").get<std::int64_t>();
    s.start_ms = doc.value("start_ms", std::int64_t{1'700'000'000'000});
    for (const auto& tj : doc.at("event_types")) {
      EventTypeSpec t;
      t.name = tj.at("name").get<std::string>();
      t.rate_per_s = tj.at("rate_per_s").get<double>();
      t.numeric_attrs = tj.value("numeric_attrs", 2);
      t.text_attrs = tj.value("text_attrs", 1);
      if (tj.contains("pad_bytes")) {
        t.pad_min_bytes = tj.at("pad_bytes").at(0).get<int>();
        t.pad_max_bytes = tj.at("pad_bytes").at(1).get<int>();
      }
      s.event_types.push_back(std::move(t));
    }
    if (doc.contains("features")) {
      const auto& fj = doc.at("features");
      s.features.count = fj.value("count", 10);
      s.features.event_types_used = fj.value("event_types_used", 0);
      s.features.redundancy_level = fj.value("redundancy_level", 0.5);
      if (fj.contains("range_vocab_s")) {
        s.features.range_vocab_s = fj.at("range_vocab_s").get<std::vector<std::int64_t>>();
      }
      s.features.multi_event_prob = fj.value("multi_event_prob", 0.15);
      s.features.zipf_exponent = fj.value("zipf_exponent", 1.1);
    }
    if (doc.contains("schedule")) {
      const auto& sj = doc.at("schedule");
      const auto kind = sj.value("kind", std::string("fixed"));
      if (kind == "fixed") {
        s.schedule.kind = Schedule::Kind::fixed;
        s.schedule.interval_s = sj.value("interval_s", 60.0);
      } else if (kind == "burst") {
        s.schedule.kind = Schedule::Kind::burst;
        s.schedule.burst_len = sj.value("burst_len", 5);
        s.schedule.intra_gap_s = sj.value("intra_gap_s", 5.0);
        s.schedule.inter_gap_s = sj.value("inter_gap_s", 300.0);
      } else {
        throw_error(Errc::validation_error, "unknown schedule kind '" + kind + "'");
      }
    }
    s.cache_budget_bytes = doc.value("cache_budget_bytes", std::uint64_t{1} << 20);
    s.inference_stub_ms = doc.value("inference_stub_ms", 0.0);
  } catch (const Json::exception& e) {
    throw_error(Errc::parse_error, e.what());
  }
  validate_scenario(s);
  return s;
}

WorkloadScenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(Errc::storage_failure, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string serialize_scenario(const WorkloadScenario& s) {
  Json types = Json::array();
  for (const auto& t : s.event_types) {
    types.push_back(Json{{"name", t.name},
                         {"rate_per_s", t.rate_per_s},
                         {"numeric_attrs", t.numeric_attrs},
                         {"text_attrs", t.text_attrs},
                         {"pad_bytes", Json::array({t.pad_min_bytes, t.pad_max_bytes})}});
  }
  Json schedule;
  if (s.schedule.kind == Schedule::Kind::fixed) {
    schedule = Json{{"kind", "fixed"}, {"interval_s", s.schedule.interval_s}};
  } else {
    schedule = Json{{"kind", "burst"},
                    {"burst_len", s.schedule.burst_len},
                    {"intra_gap_s", s.schedule.intra_gap_s},
                    {"inter_gap_s", s.schedule.inter_gap_s}};
  }
  return Json{{"model_id", s.model_id},
              {"seed", s.seed},
              {"duration_s", s.duration_s},
              {"start_ms", s.start_ms},
              {"event_types", std::move(types)},
              {"features",
               Json{{"count", s.features.count},
                    {"event_types_used", s.features.event_types_used},
                    {"redundancy_level", s.features.redundancy_level},
                    {"range_vocab_s", s.features.range_vocab_s},
                    {"multi_event_prob", s.features.multi_event_prob},
                    {"zipf_exponent", s.features.zipf_exponent}}},
              {"schedule", std::move(schedule)},
              {"cache_budget_bytes", s.cache_budget_bytes},
              {"inference_stub_ms", s.inference_stub_ms}}
      .dump(2) + "\n";
}

std::vector<TraceEvent> generate_trace(const WorkloadScenario& scenario) {
  struct Pending {
    std::int64_t ts;
    std::size_t type_index;
    std::uint64_t seq;
    TraceEvent event;
  };
  std::vector<Pending> pending;

  for (std::size_t ti = 0; ti < scenario.event_types.size(); ++ti) {
    const auto& type = scenario.event_types[ti];
    Rng rng(scenario.seed ^ fnv1a(type.name) ^ 0x9e3779b9ULL);
    double t = 0;
    std::int64_t last_ts = scenario.start_ms;
    std::uint64_t seq = 0;
    while (true) {
      t += rng.exponential(type.rate_per_s);
      if (t >= static_cast<double>(scenario.duration_s)) break;
      std::int64_t ts = scenario.start_ms + static_cast<std::int64_t>(std::llround(t * 1000.0));
      if (rng.uniform() < kSnapToSecondProb) {
        // align to the second grid so window boundaries get exercised
        ts = scenario.start_ms + static_cast<std::int64_t>(t) * 1000;
      }
      ts = std::max(ts, last_ts);
      last_ts = ts;

      TraceEvent ev;
      ev.timestamp_ms = ts;
      ev.event_name = type.name;
      ev.payload = Json::object();
      for (int a = 0; a < type.numeric_attrs; ++a) {
        ev.payload["num" + std::to_string(a)] = std::floor(rng.uniform() * 10000.0) / 10.0;
      }
      for (int a = 0; a < type.text_attrs; ++a) {
        ev.payload["txt" + std::to_string(a)] = kWords[rng.uniform_int(0, 9)];
      }
      if (type.pad_max_bytes > 0) {
        ev.payload["pad"] = std::string(
            static_cast<std::size_t>(rng.uniform_int(type.pad_min_bytes, type.pad_max_bytes)),
            'x');
      }
      pending.push_back(Pending{ts, ti, seq++, std::move(ev)});
    }
  }

  std::sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
    return std::tie(a.ts, a.type_index, a.seq) < std::tie(b.ts, b.type_index, b.seq);
  });
  std::vector<TraceEvent> trace;
  trace.reserve(pending.size());
  for (auto& p : pending) trace.push_back(std::move(p.event));
  return trace;
}

void write_trace(const std::filesystem::path& path, const std::vector<TraceEvent>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw_error(Errc::storage_failure, "cannot write " + path.string());
  for (const auto& ev : trace) {
    out << Json{{"timestamp_ms", ev.timestamp_ms},
                {"event_name", ev.event_name},
                {"payload", ev.payload}}
               .dump()
        << '\n';
  }
  if (!out) throw_error(Errc::storage_failure, "short write to " + path.string());
}

std::vector<TraceEvent> read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_error(Errc::storage_failure, "cannot read " + path.string());
  std::vector<TraceEvent> trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      throw_error(Errc::parse_error, "trace line " + std::to_string(lineno) + " is not JSON");
    }
    try {
      TraceEvent ev;
      ev.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
      ev.event_name = j.at("event_name").get<std::string>();
      ev.payload = j.at("payload");
      validate_attribute_map(ev.payload);
      trace.push_back(std::move(ev));
    } catch (const Json::exception& e) {
      throw_error(Errc::parse_error, "trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

void ingest_trace(EventLog& log, const std::vector<TraceEvent>& trace) {
  for (const auto& ev : trace) {
    log.append(ev.event_name, ev.timestamp_ms, encode_payload(ev.payload));
  }
}

ModelSpec generate_model_spec(const WorkloadScenario& scenario) {
  const auto& params = scenario.features;
  const std::size_t types_used =
      params.event_types_used > 0
          ? std::min<std::size_t>(params.event_types_used, scenario.event_types.size())
          : scenario.event_types.size();

  Rng rng(scenario.seed ^ 0xfea7'5e7'5eedULL);
  // The shared window is the widest expressible range, so fresh draws never
  // exceed it. The redundancy level then maps onto the share of features
  // whose window fully overlaps the others on their type.
  const std::int64_t shared_range =
      *std::max_element(params.range_vocab_s.begin(), params.range_vocab_s.end()) *
      kMaxRangeMultiplier;
  ModelSpec spec;
  spec.model_id = scenario.model_id;
  spec.cache_budget_bytes = scenario.cache_budget_bytes;
  spec.inference_stub_ms = scenario.inference_stub_ms;

  for (int i = 0; i < params.count; ++i) {
    // Pre-draw everything so sweeps over redundancy_level stay coupled
    // sample-by-sample.
    const double u_copy = rng.uniform();
    const std::size_t zipf_rank = rng.zipf(types_used, params.zipf_exponent);
    const double u_multi = rng.uniform();
    const std::size_t extra_a = static_cast<std::size_t>(rng.uniform_int(0, types_used - 1));
    const std::size_t extra_b = static_cast<std::size_t>(rng.uniform_int(0, types_used - 1));
    const double u_second_extra = rng.uniform();
    const std::size_t vocab_idx =
        static_cast<std::size_t>(rng.uniform_int(0, params.range_vocab_s.size() - 1));
    const std::int64_t multiplier = rng.uniform_int(1, kMaxRangeMultiplier);
    const double u_func = rng.uniform();
    const std::uint64_t attr_draw = rng.next_u64();
    const std::uint64_t attr_draw_b = rng.next_u64();
    const auto concat_limit = static_cast<std::uint32_t>(rng.uniform_int(1, 8));
    const double u_multi_attr = rng.uniform();

    // Round-robin over the first pass guarantees every used type carries at
    // least one feature; the rest follow the Zipf skew.
    const std::size_t primary =
        static_cast<std::size_t>(i) < types_used ? static_cast<std::size_t>(i) : zipf_rank;

    FeatureSpec f;
    f.event_names.push_back(scenario.event_types[primary].name);
    if (u_multi < params.multi_event_prob) {
      if (extra_a != primary) f.event_names.push_back(scenario.event_types[extra_a].name);
      if (u_second_extra < 0.5 && extra_b != primary && extra_b != extra_a) {
        f.event_names.push_back(scenario.event_types[extra_b].name);
      }
    }

    f.time_range_s = u_copy < params.redundancy_level
                         ? shared_range
                         : params.range_vocab_s[vocab_idx] * multiplier;

    const auto& primary_type = scenario.event_types[primary];
    const bool has_numeric = primary_type.numeric_attrs > 0;
    const bool has_text = primary_type.text_attrs > 0;
    auto numeric_attr = [&](std::uint64_t draw) {
      return "num" + std::to_string(draw % static_cast<std::uint64_t>(primary_type.numeric_attrs));
    };
    auto text_attr = [&](std::uint64_t draw) {
      return "txt" + std::to_string(draw % static_cast<std::uint64_t>(primary_type.text_attrs));
    };

    if (u_func < 0.25 || (!has_numeric && u_func < 0.75)) {
      f.comp_func.kind = CompFuncKind::count;
      f.attr_names.push_back(has_numeric ? numeric_attr(attr_draw) : text_attr(attr_draw));
    } else if (u_func < 0.40 && has_numeric) {
      f.comp_func.kind = CompFuncKind::sum;
      f.attr_names.push_back(numeric_attr(attr_draw));
    } else if (u_func < 0.55 && has_numeric) {
      f.comp_func.kind = CompFuncKind::avg;
      f.attr_names.push_back(numeric_attr(attr_draw));
    } else if (u_func < 0.63 && has_numeric) {
      f.comp_func.kind = CompFuncKind::min;
      f.attr_names.push_back(numeric_attr(attr_draw));
    } else if (u_func < 0.71 && has_numeric) {
      f.comp_func.kind = CompFuncKind::max;
      f.attr_names.push_back(numeric_attr(attr_draw));
    } else if (u_func < 0.83) {
      f.comp_func.kind = CompFuncKind::distinct_count;
      f.attr_names.push_back(has_text ? text_attr(attr_draw) : numeric_attr(attr_draw));
    } else {
      f.comp_func.kind = CompFuncKind::concat;
      f.comp_func.concat_limit = concat_limit;
      f.attr_names.push_back(has_text ? text_attr(attr_draw) : numeric_attr(attr_draw));
      if (u_multi_attr < 0.3 && has_numeric && has_text) {
        auto second = numeric_attr(attr_draw_b);
        if (second != f.attr_names.front()) f.attr_names.push_back(second);
      }
    }

    char id[64];
    std::snprintf(id, sizeof(id), "f%03d_%s_%s", i, comp_func_name(f.comp_func.kind),
                  scenario.event_types[primary].name.c_str());
    f.feature_id = id;
    spec.features.push_back(std::move(f));
  }

  spec = normalize(std::move(spec));
  validate_model_spec(spec);
  return spec;
}

std::vector<std::int64_t> request_schedule(const WorkloadScenario& scenario) {
  std::vector<std::int64_t> times;
  const std::int64_t end_ms = scenario.start_ms + scenario.duration_s * 1000;
  if (scenario.schedule.kind == Schedule::Kind::fixed) {
    const auto step = static_cast<std::int64_t>(scenario.schedule.interval_s * 1000.0);
    if (step <= 0) throw_error(Errc::validation_error, "interval must be positive");
    for (std::int64_t t = scenario.start_ms + step; t <= end_ms; t += step) times.push_back(t);
  } else {
    const auto intra = static_cast<std::int64_t>(scenario.schedule.intra_gap_s * 1000.0);
    const auto inter = static_cast<std::int64_t>(scenario.schedule.inter_gap_s * 1000.0);
    if (intra <= 0 || inter <= 0 || scenario.schedule.burst_len <= 0) {
      throw_error(Errc::validation_error, "bad burst schedule");
    }
    for (std::int64_t burst = scenario.start_ms + inter; burst <= end_ms; burst += inter) {
      for (int j = 0; j < scenario.schedule.burst_len; ++j) {
        const std::int64_t t = burst + j * intra;
        if (t <= end_ms) times.push_back(t);
      }
    }
  }
  return times;
}

}  // namespace fexgraph
