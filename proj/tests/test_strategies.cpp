#include <doctest.h>

#include <random>
#include <string>

#include "cat/analysis.hpp"
#include "cat/strategies.hpp"
#include "oracles.hpp"

using namespace cat;

namespace {

std::string trace_string(const RunTrace& trace) {
  std::string out;
  for (const auto& r : trace) {
    if (!out.empty()) out += ' ';
    out += std::to_string(r.level) + (r.outcome == Outcome::Pass ? "P" : "F");
  }
  return out;
}

SearchResult run_det(StrategyKind kind, std::int64_t n, std::int64_t p) {
  return run_to_completion(kind, n, DeterministicProfile{n, p});
}

}  // namespace

TEST_CASE("full traces against a deterministic subject") {
  struct Case {
    StrategyKind kind;
    std::int64_t n, p;
    const char* trace;
    std::int64_t negatives, total;
  };
  // Frozen from a step-through simulation, checked by hand.
  const Case cases[] = {
      {StrategyKind::Fun, 16, 5, "1P 2P 4P 8F 5P 6F", 2, 6},
      {StrategyKind::Fun, 16, 7, "1P 2P 4P 8F 5P 6P 8F 7P 8F", 3, 9},
      {StrategyKind::Fun, 16, 0, "1F", 1, 1},
      {StrategyKind::Frustrating, 16, 7, "1P 2P 4P 8F 7P", 1, 5},
      {StrategyKind::Frustrating, 16, 5, "1P 2P 4P 8F 7F 6F 4P 5P", 3, 8},
      {StrategyKind::Frustrating, 16, 8, "1P 2P 4P 8P 16F 15F 14F 12F 8P 11F 10F 8P 9F 8P", 7, 14},
      {StrategyKind::Sequential, 8, 3, "1P 2P 3P 4F", 1, 4},
      {StrategyKind::Sequential, 8, 8, "1P 2P 3P 4P 5P 6P 7P 8P", 0, 8},
      {StrategyKind::Binary, 7, 3, "4F 2P 3P", 1, 3},
      {StrategyKind::Binary, 7, 0, "4F 2F 1F", 3, 3},
      {StrategyKind::Doubling, 16, 5, "1P 2P 4P 8F 6F 5P", 2, 6},
  };
  for (const auto& c : cases) {
    CAPTURE(to_string(c.kind));
    CAPTURE(c.p);
    const auto res = run_det(c.kind, c.n, c.p);
    CHECK(res.found_p == c.p);
    CHECK(trace_string(res.trace) == c.trace);
    CHECK(measure(res.trace) == FrustrationMeasure{c.negatives, c.total});
  }
}

TEST_CASE("start proposes the documented first probe") {
  CHECK(SearchSession::start(StrategyKind::Fun, 16).next_probe() == 1);
  CHECK(SearchSession::start(StrategyKind::Binary, 7).next_probe() == 4);
  CHECK(SearchSession::start(StrategyKind::Sequential, 1).next_probe() == 1);
  CHECK(SearchSession::start(StrategyKind::Doubling, 1).next_probe() == 1);
  CHECK_THROWS_AS(SearchSession::start(StrategyKind::Fun, 0), std::domain_error);
  CHECK_THROWS_AS(SearchSession::start(StrategyKind::Fun, 4, SearchOptions{1}), std::domain_error);
}

TEST_CASE("observe updates the interval") {
  SUBCASE("fun gallop ends on the first fail") {
    auto s = SearchSession::start(StrategyKind::Fun, 16);
    for (Level expected : {1, 2, 4}) {
      REQUIRE(s.next_probe() == expected);
      s.observe(Outcome::Pass);
    }
    REQUIRE(s.next_probe() == 8);
    CHECK(s.observe(Outcome::Fail) == SessionStatus::ReadyToProbe);
    CHECK(s.lo() == 4);
    CHECK(s.hi() == 8);
    CHECK(s.phase() == 1);
  }
  SUBCASE("binary moves lo on pass") {
    auto s = SearchSession::start(StrategyKind::Binary, 7);
    REQUIRE(s.next_probe() == 4);
    s.observe(Outcome::Pass);
    CHECK(s.lo() == 4);
    CHECK(s.next_probe() == 6);
  }
  SUBCASE("unit interval means done") {
    auto s = SearchSession::start(StrategyKind::Sequential, 3);
    s.next_probe();
    CHECK(s.observe(Outcome::Fail) == SessionStatus::Done);
    CHECK(s.result() == 0);
  }
}

TEST_CASE("status errors") {
  auto s = SearchSession::start(StrategyKind::Binary, 4);
  CHECK_THROWS_AS(s.observe(Outcome::Pass), StateError);
  CHECK_THROWS_AS(s.result(), StateError);
  s.next_probe();
  CHECK_THROWS_AS(s.next_probe(), StateError);
  while (!s.done()) {
    s.observe(Outcome::Pass);
    if (!s.done()) s.next_probe();
  }
  CHECK(s.result() == 4);
  CHECK_THROWS_AS(s.next_probe(), StateError);
  CHECK_THROWS_AS(s.observe(Outcome::Fail), StateError);
}

TEST_CASE("state machine matches the loop-based reference on every instance") {
  for (StrategyKind kind : kAllStrategies) {
    for (std::int64_t n = 1; n <= 130; ++n) {
      for (std::int64_t p = 0; p <= n; ++p) {
        const auto ref = oracle::reference_search(kind, n, p);
        const auto res = run_det(kind, n, p);
        REQUIRE(res.found_p == p);
        REQUIRE(ref.result == p);
        REQUIRE(res.trace.size() == ref.probes.size());
        for (std::size_t i = 0; i < ref.probes.size(); ++i) {
          REQUIRE(res.trace[i].level == ref.probes[i].level);
          REQUIRE((res.trace[i].outcome == Outcome::Pass) == ref.probes[i].pass);
          REQUIRE(res.trace[i].sequence_no == static_cast<std::int64_t>(i) + 1);
        }
      }
    }
  }
}

TEST_CASE("noisy subjects: interval stays valid and the search terminates") {
  std::mt19937_64 rng(2024);
  for (StrategyKind kind : kAllStrategies) {
    for (int trial = 0; trial < 400; ++trial) {
      const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 70);
      std::bernoulli_distribution coin(0.5);
      auto s = SearchSession::start(kind, n);
      std::vector<std::pair<Level, bool>> answers;
      while (!s.done()) {
        REQUIRE(s.trace().size() < 20000);
        const Level level = s.next_probe();
        REQUIRE(level >= 1);
        REQUIRE(level <= n);
        const bool pass = coin(rng);
        answers.emplace_back(level, pass);
        s.observe(pass ? Outcome::Pass : Outcome::Fail);
        REQUIRE(0 <= s.lo());
        REQUIRE(s.lo() < s.hi());
        REQUIRE(s.hi() <= n + 1);
      }
      // Replaying the same answers through the reference loop gives the same run.
      std::size_t i = 0;
      const auto ref = oracle::reference_search(kind, n, [&](std::int64_t level) {
        REQUIRE(i < answers.size());
        REQUIRE(answers[i].first == level);
        return answers[i++].second;
      });
      CHECK(ref.result == s.result());
      CHECK(i == answers.size());
    }
  }
}

TEST_CASE("sessions resume from their serialized state") {
  std::mt19937_64 rng(5);
  for (StrategyKind kind : kAllStrategies) {
    for (int trial = 0; trial < 50; ++trial) {
      const std::int64_t n = 1 + static_cast<std::int64_t>(rng() % 200);
      const std::int64_t p = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n + 1));
      auto live = SearchSession::start(kind, n);
      const auto cut = rng() % 12;
      for (std::uint64_t step = 0; step < cut && !live.done(); ++step) {
        const Level level = live.next_probe();
        if (step + 1 < cut) live.observe(answer_deterministic(p, level, n));
      }
      const auto blob = live.to_json();
      CHECK(blob.at("v") == SearchSession::kFormatVersion);
      auto resumed = SearchSession::from_json(nlohmann::json::parse(blob.dump()));
      REQUIRE(resumed == live);
      REQUIRE(resumed.to_json().dump() == blob.dump());
      auto finish = [&](SearchSession& s) {
        if (s.pending()) s.observe(answer_deterministic(p, *s.pending(), n));
        while (!s.done()) s.observe(answer_deterministic(p, s.next_probe(), n));
      };
      finish(live);
      finish(resumed);
      CHECK(resumed == live);
      CHECK(resumed.result() == p);
    }
  }
}

TEST_CASE("from_json rejects inconsistent state") {
  auto blob = SearchSession::start(StrategyKind::Fun, 8).to_json();
  auto bad = blob;
  bad["v"] = 2;
  CHECK_THROWS_AS(SearchSession::from_json(bad), std::invalid_argument);
  bad = blob;
  bad["lo"] = 9;
  CHECK_THROWS_AS(SearchSession::from_json(bad), std::invalid_argument);
  bad = blob;
  bad["strategy"] = "ternary";
  CHECK_THROWS_AS(SearchSession::from_json(bad), std::invalid_argument);
  bad = blob;
  bad.erase("trace");
  CHECK_THROWS_AS(SearchSession::from_json(bad), std::invalid_argument);
  CHECK_THROWS_AS(SearchSession::from_json(nlohmann::json::array()), std::invalid_argument);
}

TEST_CASE("strategy names") {
  for (StrategyKind kind : kAllStrategies) CHECK(parse_strategy(to_string(kind)) == kind);
  CHECK(to_string(StrategyKind::Frustrating) == "frustrating");
  CHECK_THROWS_AS(parse_strategy("Fun"), std::invalid_argument);
}

TEST_CASE("run_to_completion validates its inputs") {
  CHECK_THROWS_AS(run_to_completion(StrategyKind::Fun, 8, ExternalProfile{}), std::domain_error);
  CHECK_THROWS_AS(run_to_completion(StrategyKind::Fun, 8, DeterministicProfile{9, 3}), std::domain_error);
  const auto all_pass = run_to_completion(StrategyKind::Fun, 3, StochasticProfile{{1, 1, 1}, 0.8, 5});
  CHECK(all_pass.found_p == 3);
  const auto none = run_to_completion(StrategyKind::Fun, 3, StochasticProfile{{0, 0, 0}, 0.8, 5});
  CHECK(none.found_p == 0);
}

TEST_CASE("a larger gallop base is still correct") {
  for (StrategyKind kind : {StrategyKind::Doubling, StrategyKind::Fun, StrategyKind::Frustrating}) {
    for (std::int64_t n = 1; n <= 100; ++n) {
      for (std::int64_t p = 0; p <= n; ++p) {
        REQUIRE(run_to_completion(kind, n, DeterministicProfile{n, p}, {}, SearchOptions{3}).found_p == p);
      }
    }
  }
  const auto res = run_to_completion(StrategyKind::Fun, 64, DeterministicProfile{64, 20}, {}, SearchOptions{3});
  CHECK(trace_string(res.trace).rfind("1P 3P 9P 27F", 0) == 0);
}
