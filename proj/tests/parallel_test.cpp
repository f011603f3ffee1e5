#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fexgraph/bench.hpp"
#include "fexgraph/decode_kernels.hpp"
#include "test_support.hpp"

using namespace fexgraph;
using namespace fexgraph::test;

namespace {

std::vector<BehaviorEvent> synthetic_batch(int rows, bool with_garbage) {
  Rng rng(rows);
  std::vector<BehaviorEvent> batch;
  for (int i = 0; i < rows; ++i) {
    BehaviorEvent ev;
    ev.event_id = static_cast<std::uint64_t>(i + 1);
    ev.event_name = "e";
    ev.timestamp_ms = 1000 + i;
    if (with_garbage && rng.uniform() < 0.05) {
      ev.payload = "broken payload";
    } else {
      AttributeMap attrs{{"v", rng.uniform() * 100.0}, {"s", "w" + std::to_string(i % 7)}};
      ev.payload = encode_payload(attrs);
    }
    batch.push_back(std::move(ev));
  }
  return batch;
}

}  // namespace

TEST_CASE("parallel decode matches the serial reference in content and order") {
  for (int rows : {0, 1, 100, 4096}) {
    for (bool garbage : {false, true}) {
      auto batch = synthetic_batch(rows, garbage);
      auto serial = decode_batch_serial(batch);
      auto parallel = decode_batch_parallel(batch);
      REQUIRE(serial.rows.size() == parallel.rows.size());
      CHECK(serial.decoded == parallel.decoded);
      CHECK(serial.malformed == parallel.malformed);
      CHECK(serial.payload_bytes == parallel.payload_bytes);
      for (std::size_t i = 0; i < serial.rows.size(); ++i) {
        REQUIRE(serial.rows[i].event_id == parallel.rows[i].event_id);
        REQUIRE(*serial.rows[i].attrs == *parallel.rows[i].attrs);
      }
    }
  }
}

TEST_CASE("group-parallel extraction matches serial values and counters") {
  for (int trial = 0; trial < 30; ++trial) {
    auto trial_data = make_trial(5100 + trial);
    ScopedTempFile file("parallel_engine");
    auto log = EventLog::open(file.path());
    ingest_trace(log, trial_data.trace);

    for (auto mode : {BenchMode::naive, BenchMode::fused, BenchMode::full}) {
      auto serial_opts = engine_options_for(mode, {});
      auto parallel_opts = serial_opts;
      parallel_opts.parallel = true;

      Engine serial(trial_data.spec, log, serial_opts);
      Engine parallel(trial_data.spec, log, parallel_opts);
      for (auto t : trial_data.schedule) {
        auto a = serial.extract(t);
        auto b = parallel.extract(t);
        REQUIRE(a.values.size() == b.values.size());
        for (const auto& [fid, value] : a.values) REQUIRE(b.values.at(fid) == value);
        REQUIRE(a.feature_errors == b.feature_errors);
        CHECK(a.stats.rows_retrieved == b.stats.rows_retrieved);
        CHECK(a.stats.decode_calls == b.stats.decode_calls);
        CHECK(a.stats.filter_threshold_comparisons == b.stats.filter_threshold_comparisons);
        CHECK(a.stats.cache_hit_rows == b.stats.cache_hit_rows);
        CHECK(a.stats.compute_values == b.stats.compute_values);
      }
    }
  }
}

TEST_CASE("log tolerates concurrent readers from parallel groups") {
  // engine-level smoke: many groups hitting the same log concurrently
  ModelSpec spec;
  spec.model_id = "m";
  for (int i = 0; i < 24; ++i) {
    FeatureSpec f;
    f.feature_id = "f" + std::to_string(i);
    f.event_names = {"e" + std::to_string(i)};
    f.time_range_s = 600;
    f.attr_names = {"v"};
    f.comp_func.kind = CompFuncKind::count;
    spec.features.push_back(std::move(f));
  }
  spec = normalize(std::move(spec));

  ScopedTempFile file("parallel_log");
  auto log = EventLog::open(file.path());
  Rng rng(1);
  const std::int64_t t0 = 1'000'000'000;
  for (int i = 0; i < 2000; ++i) {
    log.append("e" + std::to_string(rng.uniform_int(0, 23)), t0 + i * 17, R"({"v":1})");
  }

  EngineOptions opts;
  opts.fuse = true;
  opts.cache = false;
  opts.parallel = true;
  Engine engine(spec, log, opts);
  auto result = engine.extract(t0 + 2000 * 17);
  std::uint64_t total = 0;
  for (const auto& [fid, value] : result.values) {
    total += static_cast<std::uint64_t>(value.value.get<double>());
  }
  CHECK(total == 2000);
}
