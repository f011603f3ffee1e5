#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "fexgraph/bench.hpp"
#include "fexgraph/cache_policy.hpp"
#include "fexgraph/errors.hpp"
#include "test_support.hpp"

using namespace fexgraph;
using namespace fexgraph::test;

namespace {

// Construct a profile whose utility/cost land exactly on the given values at
// the given interval: fix range and rate, solve for per-row cost and size.
EventTypeProfile exact_profile(std::string name, double utility_target, double cost_bytes,
                               double interval_ms = 60'000.0) {
  EventTypeProfile p;
  p.event_name = std::move(name);
  p.max_time_range_s = 3600;
  p.rate_per_s = 1.0;
  const double overlap_s = static_cast<double>(p.max_time_range_s) - interval_ms / 1000.0;
  p.cost_opt_per_event_ns = utility_target / (p.rate_per_s * overlap_s);
  p.size_per_event_bytes = cost_bytes / (p.rate_per_s * static_cast<double>(p.max_time_range_s));
  p.static_ratio = p.cost_opt_per_event_ns / p.size_per_event_bytes;
  return p;
}

EventTypeProfile random_profile(Rng& rng, int index) {
  EventTypeProfile p;
  p.event_name = "t" + std::to_string(index);
  p.max_time_range_s = rng.uniform_int(60, 86'400);
  p.rate_per_s = 0.001 + rng.uniform() * 2.0;
  p.cost_opt_per_event_ns = 100.0 + rng.uniform() * 5000.0;
  p.size_per_event_bytes = 40.0 + rng.uniform() * 400.0;
  p.static_ratio = p.cost_opt_per_event_ns / p.size_per_event_bytes;
  return p;
}

// Exhaustive subset enumeration over real byte costs.
double enumerate_best(const std::vector<EventTypeProfile>& profiles, double interval_ms,
                      std::uint64_t budget) {
  const std::size_t n = profiles.size();
  double best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double utility = 0;
    double cost = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) {
        utility += cache_utility(profiles[i], interval_ms);
        cost += cache_cost_bytes(profiles[i]);
      }
    }
    if (cost <= static_cast<double>(budget)) best = std::max(best, utility);
  }
  return best;
}

// Enumeration under the oracle's own contract: costs rounded up to 64-byte
// units, budget rounded down.
double enumerate_best_discretized(const std::vector<EventTypeProfile>& profiles,
                                  double interval_ms, std::uint64_t budget) {
  const std::size_t n = profiles.size();
  const std::uint64_t budget_units = budget / 64;
  double best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double utility = 0;
    std::uint64_t units = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) {
        utility += cache_utility(profiles[i], interval_ms);
        units += static_cast<std::uint64_t>(std::ceil(cache_cost_bytes(profiles[i]) / 64.0));
      }
    }
    if (units <= budget_units) best = std::max(best, utility);
  }
  return best;
}

CachedRow make_row(std::uint64_t id, std::int64_t ts, std::uint32_t size) {
  return CachedRow{id, ts, std::make_shared<const AttributeMap>(Json::object()), size};
}

}  // namespace

TEST_CASE("utility: overlap clamps at zero and subtracts the interval") {
  EventTypeProfile p;
  p.event_name = "e";
  p.max_time_range_s = 3600;
  p.rate_per_s = 2.0;
  p.cost_opt_per_event_ns = 500.0;
  p.size_per_event_bytes = 100.0;
  p.static_ratio = 5.0;

  CHECK(cache_utility(p, 3600.0 * 1000.0) == 0.0);       // interval == range
  CHECK(cache_utility(p, 2.0 * 3600.0 * 1000.0) == 0.0); // interval > range
  // range 3600 s, interval 60 s -> overlap factor 3540 s
  CHECK(cache_utility(p, 60'000.0) == doctest::Approx(2.0 * 3540.0 * 500.0));
}

TEST_CASE("decomposition identity: utility/cost == static_ratio * overlap/range") {
  Rng rng(5050);
  for (int i = 0; i < 500; ++i) {
    auto p = random_profile(rng, i);
    const double interval_ms = rng.uniform() * 2.0 * static_cast<double>(p.max_time_range_s) * 1000.0;
    const double direct = utility_cost_ratio(p, interval_ms);
    const double overlap_s =
        std::max(0.0, static_cast<double>(p.max_time_range_s) - interval_ms / 1000.0);
    const double decomposed =
        p.static_ratio * (overlap_s / static_cast<double>(p.max_time_range_s));
    if (decomposed == 0.0) {
      CHECK(direct == 0.0);
    } else {
      CHECK(std::abs(direct - decomposed) <= 1e-12 * std::abs(decomposed));
    }
  }
}

TEST_CASE("greedy plan: documented 3-item instance") {
  // utilities 10/7/4 with costs 5/4/3 units of 64 bytes, budget 7 units
  std::vector<EventTypeProfile> profiles{
      exact_profile("a", 10.0, 5.0 * 64), exact_profile("b", 7.0, 4.0 * 64),
      exact_profile("c", 4.0, 3.0 * 64)};
  const std::uint64_t budget = 7 * 64;

  auto greedy = plan_cache_greedy(profiles, 60'000.0, budget);
  CHECK(greedy.keep == std::set<std::string>{"a"});  // ratio order a > b > c; only a fits
  CHECK(greedy.predicted_utility == doctest::Approx(10.0));

  auto dp = dp_oracle(profiles, 60'000.0, budget);
  CHECK(dp.keep == std::set<std::string>{"b", "c"});
  CHECK(dp.predicted_utility == doctest::Approx(11.0));

  // 2-approximation on this instance
  CHECK(greedy.predicted_utility * 2.0 >= dp.predicted_utility);
  CHECK(enumerate_best(profiles, 60'000.0, budget) == doctest::Approx(11.0));
}

TEST_CASE("budget zero yields an empty plan") {
  Rng rng(11);
  std::vector<EventTypeProfile> profiles{random_profile(rng, 0), random_profile(rng, 1)};
  auto plan = plan_cache_greedy(profiles, 30'000.0, 0);
  CHECK(plan.keep.empty());
  CHECK(plan.predicted_utility == 0.0);
}

TEST_CASE("greedy utility is at least half the DP optimum on random instances") {
  Rng rng(616);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 20));
    std::vector<EventTypeProfile> profiles;
    for (int i = 0; i < n; ++i) {
      auto p = random_profile(rng, i);
      p.rate_per_s = 0.001 + rng.uniform() * 0.05;  // keep budgets inside dp range
      p.max_time_range_s = rng.uniform_int(60, 36'000);
      p.static_ratio = p.cost_opt_per_event_ns / p.size_per_event_bytes;
      profiles.push_back(std::move(p));
    }
    const double interval_ms = rng.uniform() * 600'000.0;
    double total_cost = 0;
    for (const auto& p : profiles) total_cost += cache_cost_bytes(p);
    const auto budget = static_cast<std::uint64_t>(rng.uniform() * total_cost);

    auto greedy = plan_cache_greedy(profiles, interval_ms, budget);
    auto dp = dp_oracle(profiles, interval_ms, budget);
    REQUIRE(greedy.predicted_utility * 2.0 >= dp.predicted_utility - 1e-9);
    REQUIRE(greedy.predicted_cost_bytes <= static_cast<double>(budget) + 1e-6);
  }
}

TEST_CASE("dp oracle matches exhaustive enumeration for n <= 12") {
  Rng rng(617);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = static_cast<int>(rng.uniform_int(1, 12));
    std::vector<EventTypeProfile> profiles;
    for (int i = 0; i < n; ++i) {
      // costs in whole 64-byte units so discretization is exact
      auto p = random_profile(rng, i);
      const double units = static_cast<double>(rng.uniform_int(1, 64));
      p.size_per_event_bytes =
          units * 64.0 / (p.rate_per_s * static_cast<double>(p.max_time_range_s));
      p.static_ratio = p.cost_opt_per_event_ns / p.size_per_event_bytes;
      profiles.push_back(std::move(p));
    }
    const double interval_ms = rng.uniform() * 600'000.0;
    const auto budget = static_cast<std::uint64_t>(rng.uniform_int(0, 80)) * 64;

    auto dp = dp_oracle(profiles, interval_ms, budget);
    const double brute = enumerate_best_discretized(profiles, interval_ms, budget);
    REQUIRE(dp.predicted_utility == doctest::Approx(brute).epsilon(1e-9));
    // conservative rounding keeps the dp at or below the real-cost optimum
    const double real_best = enumerate_best(profiles, interval_ms, budget);
    REQUIRE(dp.predicted_utility <= real_best * (1.0 + 1e-9) + 1e-9);
  }
}

TEST_CASE("dp oracle: single fitting item and size guards") {
  auto p = exact_profile("only", 5.0, 320.0);
  auto plan = dp_oracle({p}, 60'000.0, 1024);
  CHECK(plan.keep == std::set<std::string>{"only"});

  std::vector<EventTypeProfile> too_many(65, p);
  CHECK_THROWS_AS(dp_oracle(too_many, 60'000.0, 1024), Error);
  CHECK_THROWS_AS(dp_oracle({p}, 60'000.0, std::uint64_t{65'000'000} * 64), Error);
}

TEST_CASE("update drops unplanned types and prunes expired rows") {
  CacheState cache;
  cache.budget_bytes = 1 << 20;
  std::map<std::string, std::int64_t> ranges{{"keep", 300}, {"drop", 300}};

  CachePlan plan;
  plan.keep = {"keep", "drop"};
  plan.ratios = {{"keep", 2.0}, {"drop", 1.0}};
  std::map<std::string, FreshTypeRows> fresh;
  fresh["keep"].rows = {make_row(1, 1'000'000, 100), make_row(2, 1'200'000, 100)};
  fresh["keep"].has_position = true;
  fresh["keep"].max_position_ts = 1'200'000;
  fresh["keep"].max_position_id = 2;
  fresh["drop"].rows = {make_row(3, 1'100'000, 50)};
  fresh["drop"].has_position = true;
  fresh["drop"].max_position_ts = 1'100'000;
  fresh["drop"].max_position_id = 3;
  update_after_execution(cache, plan, fresh, 1'200'000, ranges);
  CHECK(cache.accounted_bytes == 250);

  // next request keeps only "keep"; "drop" vanishes entirely
  CachePlan plan2;
  plan2.keep = {"keep"};
  plan2.ratios = plan.ratios;
  update_after_execution(cache, plan2, {}, 1'250'000, ranges);
  CHECK(cache.find("drop") == nullptr);
  CHECK(cache.accounted_bytes == 200);

  // rows older than request - max_range are pruned
  update_after_execution(cache, plan2, {}, 1'000'000 + 300'000 + 1, ranges);
  REQUIRE(cache.find("keep") != nullptr);
  CHECK(cache.find("keep")->rows.size() == 1);
  CHECK(cache.accounted_bytes == 100);
}

TEST_CASE("eviction order: survivors form a prefix of the ratio-descending order") {
  Rng rng(303);
  for (int trial = 0; trial < 100; ++trial) {
    CacheState cache;
    cache.budget_bytes = 1 << 30;
    const int n = static_cast<int>(rng.uniform_int(1, 10));
    std::vector<std::pair<double, std::string>> by_ratio;
    for (int i = 0; i < n; ++i) {
      std::string name = "t" + std::to_string(i);
      auto& state = cache.types[name];
      state.rows = {make_row(1, 1000, static_cast<std::uint32_t>(rng.uniform_int(50, 500)))};
      state.bytes = state.rows[0].size_bytes;
      state.last_ratio = rng.uniform() * 10.0;
      cache.accounted_bytes += state.bytes;
      by_ratio.emplace_back(state.last_ratio, name);
    }
    std::sort(by_ratio.begin(), by_ratio.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });

    const auto new_budget = static_cast<std::uint64_t>(rng.uniform() *
                                                       static_cast<double>(cache.accounted_bytes));
    evict_to_budget(cache, new_budget);
    CHECK(cache.accounted_bytes <= new_budget);

    // survivors must be a prefix of the descending-ratio order
    bool seen_evicted = false;
    for (const auto& [ratio, name] : by_ratio) {
      const bool survived = cache.find(name) != nullptr;
      if (!survived) seen_evicted = true;
      if (seen_evicted) CHECK_FALSE(survived);
    }
  }

  SUBCASE("no-op and total eviction") {
    CacheState cache;
    cache.budget_bytes = 1000;
    auto& state = cache.types["a"];
    state.rows = {make_row(1, 1, 100)};
    state.bytes = 100;
    cache.accounted_bytes = 100;
    evict_to_budget(cache, 1000);
    CHECK(cache.accounted_bytes == 100);  // new budget >= usage: no-op
    evict_to_budget(cache, 0);
    CHECK(cache.accounted_bytes == 0);
    CHECK(cache.types.empty());
  }
}

TEST_CASE("budget safety under random update/evict sequences") {
  Rng rng(787);
  for (int trial = 0; trial < 20; ++trial) {
    CacheState cache;
    cache.budget_bytes = 4096;
    std::map<std::string, std::int64_t> ranges{{"a", 600}, {"b", 600}, {"c", 600}};
    std::int64_t now = 1'000'000;
    std::uint64_t next_id = 1;
    for (int step = 0; step < 1000; ++step) {
      now += rng.uniform_int(1, 5'000);
      const int action = static_cast<int>(rng.uniform_int(0, 3));
      if (action == 0) {
        evict_to_budget(cache, static_cast<std::uint64_t>(rng.uniform_int(0, 8192)));
      } else {
        CachePlan plan;
        std::map<std::string, FreshTypeRows> fresh;
        for (const auto& [name, range] : ranges) {
          plan.ratios[name] = rng.uniform() * 4.0;
          if (rng.uniform() < 0.7) plan.keep.insert(name);
          if (rng.uniform() < 0.8) {
            auto& f = fresh[name];
            const int rows = static_cast<int>(rng.uniform_int(0, 5));
            for (int r = 0; r < rows; ++r) {
              f.rows.push_back(make_row(next_id++, now - rng.uniform_int(0, 300'000),
                                        static_cast<std::uint32_t>(rng.uniform_int(40, 400))));
            }
            std::sort(f.rows.begin(), f.rows.end(), [](const auto& x, const auto& y) {
              return std::make_pair(x.timestamp_ms, x.event_id) <
                     std::make_pair(y.timestamp_ms, y.event_id);
            });
            if (!f.rows.empty()) {
              f.has_position = true;
              f.max_position_ts = f.rows.back().timestamp_ms;
              f.max_position_id = f.rows.back().event_id;
            }
          }
        }
        update_after_execution(cache, plan, fresh, now, ranges);
      }
      // accounting invariant after every public operation
      std::uint64_t total = 0;
      for (const auto& [name, state] : cache.types) {
        std::uint64_t bytes = 0;
        for (const auto& row : state.rows) bytes += row.size_bytes;
        REQUIRE(bytes == state.bytes);
        total += bytes;
      }
      REQUIRE(total == cache.accounted_bytes);
      REQUIRE(cache.accounted_bytes <= cache.budget_bytes);
    }
  }
}

TEST_CASE("profiles: deterministic in abstract mode, sizes exact for constant payloads") {
  ScopedTempFile file("profile_log");
  auto log = EventLog::open(file.path());
  const std::string payload_small = R"({"v":1})";
  std::string payload_big = R"({"pad":")" + std::string(200, 'x') + R"(","v":2})";
  for (int i = 0; i < 40; ++i) {
    log.append("small", 1'000'000 + i * 100, payload_small);
    log.append("big", 1'000'000 + i * 100 + 1, payload_big);
  }

  ModelSpec spec;
  spec.model_id = "m";
  for (const char* name : {"small", "big"}) {
    FeatureSpec f;
    f.feature_id = std::string("f_") + name;
    f.event_names = {name};
    f.time_range_s = 600;
    f.attr_names = {"v"};
    f.comp_func.kind = CompFuncKind::count;
    spec.features.push_back(std::move(f));
  }
  spec = normalize(std::move(spec));

  auto a = profile_event_types(spec, log, CostMode::abstract_cost);
  auto b = profile_event_types(spec, log, CostMode::abstract_cost);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].event_name == b[i].event_name);
    CHECK(a[i].cost_opt_per_event_ns == b[i].cost_opt_per_event_ns);
    CHECK(a[i].size_per_event_bytes == b[i].size_per_event_bytes);
  }

  // bigger payloads cost more to decode; pruned sizes here are equal, so the
  // ratio ordering follows the cost ordering
  const auto& big = a[0].event_name == "big" ? a[0] : a[1];
  const auto& small = a[0].event_name == "small" ? a[0] : a[1];
  CHECK(big.cost_opt_per_event_ns > small.cost_opt_per_event_ns);
  CHECK(big.cost_opt_per_event_ns ==
        doctest::Approx(200.0 + 3.0 * static_cast<double>(payload_big.size())));
  // pruned record = {"v":N} -> encoded length + 32, exact for constant payloads
  CHECK(small.size_per_event_bytes == doctest::Approx(7.0 + 32.0));
  CHECK(big.static_ratio > small.static_ratio);

  // a type with no rows gets a synthetic fallback profile
  FeatureSpec ghost;
  ghost.feature_id = "f_ghost";
  ghost.event_names = {"ghost"};
  ghost.time_range_s = 600;
  ghost.attr_names = {"v"};
  ghost.comp_func.kind = CompFuncKind::count;
  spec.features.push_back(std::move(ghost));
  spec = normalize(std::move(spec));
  auto with_ghost = profile_event_types(spec, log, CostMode::abstract_cost);
  REQUIRE(with_ghost.size() == 3);
  for (const auto& p : with_ghost) {
    CHECK(p.cost_opt_per_event_ns > 0);
    CHECK(p.size_per_event_bytes > 0);
  }
}

TEST_CASE("interval estimate: default, first gap, then EWMA at alpha 0.3") {
  CacheState cache;
  CHECK(cache.interval_estimate_ms == 60'000.0);
  observe_request_gap(cache, 1'000'000);
  CHECK(cache.interval_estimate_ms == 60'000.0);  // still the default
  observe_request_gap(cache, 1'010'000);
  CHECK(cache.interval_estimate_ms == 10'000.0);  // first gap seeds it
  observe_request_gap(cache, 1'030'000);
  CHECK(cache.interval_estimate_ms == doctest::Approx(0.3 * 20'000.0 + 0.7 * 10'000.0));
}
