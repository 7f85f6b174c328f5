#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "common.hpp"
#include "oracle.hpp"

using namespace trainforge;
using namespace trainforge::scoring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("task completion counts only answered steps") {
  CHECK(task_completion(StepTerminal::Answered) == 1);
  CHECK(task_completion(StepTerminal::TimedOut) == 0);
  CHECK(task_completion(StepTerminal::Aborted) == 0);
}

TEST_CASE("average task time") {
  const std::vector<double> d{15, 25, 20, 18, 22};
  CHECK_THAT(average_task_time(d), WithinAbs(20.0, 1e-12));
  CHECK_THROWS_AS(average_task_time({}), Error);
  const std::vector<double> bad{3, -1};
  try {
    average_task_time(bad);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "negative-duration");
  }
}

TEST_CASE("success rate") {
  CHECK(success_rate(3, 4) == 0.75);
  CHECK(success_rate(0, 5) == 0.0);
  try {
    success_rate(0, 0);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "no-attempts");
  }
  CHECK_THROWS_AS(success_rate(5, 4), Error);
}

TEST_CASE("weighted score sums score times weight") {
  const std::vector<ScoredTask> t{{1, 0.2}, {0, 0.3}, {1, 0.5}};
  CHECK_THAT(weighted_score(t), WithinAbs(0.7, 1e-12));
  const std::vector<ScoredTask> bad{{1, 0.0}};
  CHECK_THROWS_AS(weighted_score(bad), Error);
}

TEST_CASE("order accuracy worked examples") {
  auto r = order_accuracy({"s1", "s2", "s3", "s4", "s5"}, {"s1", "s3", "s2", "s4", "s5"});
  CHECK(r.matches == std::vector<int>{1, 0, 0, 1, 1});
  CHECK_THAT(r.x, WithinAbs(0.6, 1e-12));
  CHECK(order_accuracy({"a", "b"}, {"a"}).x == 0.5);
  CHECK(order_accuracy({"a", "b"}, {"a", "b", "c"}).x == 1.0);
  CHECK(order_accuracy({"a", "b"}, {}).x == 0.0);
  CHECK_THROWS_AS(order_accuracy({}, {"a"}), Error);
}

TEST_CASE("order accuracy agrees with a positional count over all short sequences") {
  // Every pair over a 3-symbol alphabet up to length 3 (the acceptance
  // binary covers the larger space).
  std::vector<std::vector<int>> seqs{{}};
  for (int len = 1; len <= 3; ++len) {
    std::vector<std::vector<int>> next;
    for (const auto& s : seqs)
      if (static_cast<int>(s.size()) == len - 1)
        for (int c = 0; c < 3; ++c) {
          auto t = s;
          t.push_back(c);
          next.push_back(t);
        }
    seqs.insert(seqs.end(), next.begin(), next.end());
  }
  for (const auto& e : seqs) {
    if (e.empty()) continue;
    for (const auto& p : seqs) {
      int hits = 0;
      for (std::size_t i = 0; i < e.size(); ++i) hits += (i < p.size() && p[i] == e[i]);
      REQUIRE(order_accuracy(e, p).x == static_cast<double>(hits) / e.size());
    }
  }
}

TEST_CASE("action correctness counts missing actions as wrong") {
  std::vector<Situation> sits(4);
  for (int i = 0; i < 4; ++i) {
    sits[i].id = "s" + std::to_string(i);
    sits[i].correct_action_id = "ok";
  }
  std::map<std::string, std::string> done{{"s0", "ok"}, {"s1", "bad"}, {"s3", "ok"}};
  CHECK(action_correctness(sits, done) == 0.5);
}

TEST_CASE("VRTSS anchor values") {
  CHECK_THAT(vrtss(1, 1), WithinAbs(1.0, 1e-12));
  CHECK_THAT(vrtss(0, 0), WithinAbs(0.0, 1e-12));
  CHECK_THAT(vrtss(1, 0), WithinAbs(0.3, 1e-12));
  CHECK_THAT(vrtss(0, 1), WithinAbs(0.2, 1e-12));
  CHECK_THAT(vrtss(0.5, 0.5), WithinAbs(0.5, 1e-12));
  CHECK_THAT(vrtss(0.6, 1.0), WithinAbs(0.18 + 0.2 + std::sqrt(0.15), 1e-12));
  CHECK_THROWS_AS(vrtss(1.1, 0.5), Error);
  CHECK_THROWS_AS(vrtss(0.5, -0.1), Error);
}

TEST_CASE("VRTSS stays in bounds and is monotone") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng), y = u(rng), dx = u(rng) * (1 - x), dy = u(rng) * (1 - y);
    const double v = vrtss(x, y);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
    REQUIRE(vrtss(x + dx, y) >= v);
    REQUIRE(vrtss(x, y + dy) >= v);
  }
}

TEST_CASE("engagement frequency") {
  CHECK(engagement_frequency(30, 600.0) == 0.05);
  CHECK_THROWS_AS(engagement_frequency(3, 0.0), Error);
}

TEST_CASE("cohort stats match numpy on a frozen sample") {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9};
  const auto s = cohort_stats(v);
  CHECK(s.count == 15);
  CHECK_THAT(s.mean, WithinAbs(5.133333333333334, 1e-12));
  CHECK_THAT(s.std, WithinAbs(2.8250579429371676, 1e-12));
  CHECK(s.min == 1);
  CHECK(s.q25 == 3.0);
  CHECK(s.q50 == 5.0);
  CHECK(s.q75 == 7.5);
  CHECK(s.max == 9);
}

TEST_CASE("cohort stats agree with the longhand oracle on random cohorts") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(1 + trial % 20);
    for (auto& x : v) x = u(rng);
    const auto s = cohort_stats(v);
    const auto o = oracle::stats(v);
    REQUIRE_THAT(s.mean, WithinAbs(o.mean, 1e-9));
    REQUIRE_THAT(s.std, WithinAbs(o.std, 1e-9));
    REQUIRE_THAT(s.q25, WithinAbs(o.q25, 1e-9));
    REQUIRE_THAT(s.q50, WithinAbs(o.q50, 1e-9));
    REQUIRE_THAT(s.q75, WithinAbs(o.q75, 1e-9));
    REQUIRE(s.min == o.min);
    REQUIRE(s.max == o.max);
  }
}

TEST_CASE("single-value cohort has zero spread") {
  const std::vector<double> v{0.42};
  const auto s = cohort_stats(v);
  CHECK(s.std == 0.0);
  CHECK(s.q25 == 0.42);
  CHECK(s.q75 == 0.42);
  CHECK_THROWS_AS(cohort_stats({}), Error);
}

TEST_CASE("one-sample t test matches scipy") {
  struct Case {
    std::vector<double> v;
    double t, p;
  };
  const std::vector<Case> cases{
      {{0.62, 0.71, 0.55, 0.80, 0.66, 0.59, 0.73}, 5.0418900138577785, 0.0023524367186128015},
      {{0.1, 0.3, 0.2, 0.4}, -3.8729833462074175, 0.03046629166217096},
      {{0.45, 0.52, 0.49, 0.51, 0.48, 0.5, 0.47, 0.53}, -0.6622661785325193, 0.5289936281086369},
  };
  for (const auto& c : cases) {
    const auto r = one_sample_t_test(c.v, 0.5);
    CHECK_THAT(r.t, WithinRel(c.t, 1e-10));
    CHECK_THAT(r.p, WithinRel(c.p, 1e-8));
    CHECK(r.df == c.v.size() - 1);
    CHECK_THAT(r.p, WithinAbs(oracle::t_pvalue(r.t, double(r.df)), 1e-9));
  }
  const std::vector<double> flat{0.5, 0.5, 0.5};
  CHECK_THROWS_AS(one_sample_t_test(flat, 0.5), Error);
  const std::vector<double> one{0.5};
  CHECK_THROWS_AS(one_sample_t_test(one, 0.5), Error);
}
