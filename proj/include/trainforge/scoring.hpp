#pragma once

// Metric formulas: task completion, average task time, success rate, weighted
// score, positional order accuracy (X), action correctness (Y), the VRTSS
// composite, engagement frequency, and cohort descriptive statistics.
//
// Every function is pure. Invalid inputs raise trainforge::Error with a
// stable code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <ranges>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "trainforge/error.hpp"
#include "trainforge/scenario.hpp"

namespace trainforge::scoring {

enum class StepTerminal { Answered, TimedOut, Aborted };

// C in the completion metric. Completion is about submitting before the
// deadline; correctness is tracked separately.
constexpr int task_completion(StepTerminal outcome) { return outcome == StepTerminal::Answered ? 1 : 0; }

inline double average_task_time(std::span<const double> durations) {
  if (durations.empty()) throw Error("no-completed-tasks", "average task time needs at least one duration");
  double sum = 0.0;
  for (double d : durations) {
    if (!(d >= 0.0)) throw Error("negative-duration", "task durations must be >= 0");
    sum += d;
  }
  return sum / static_cast<double>(durations.size());
}

inline double success_rate(std::size_t successes, std::size_t attempts) {
  if (attempts == 0) throw Error("no-attempts", "success rate needs at least one attempt");
  if (successes > attempts) throw Error("invalid-count", "successes exceed attempts");
  return static_cast<double>(successes) / static_cast<double>(attempts);
}

struct ScoredTask {
  double score = 0.0;   // S_i
  double weight = 1.0;  // W_i
};

inline double weighted_score(std::span<const ScoredTask> tasks) {
  double total = 0.0;
  for (const auto& t : tasks) {
    if (!(t.weight > 0.0)) throw Error("weight-nonpositive", "task weights must be > 0");
    if (!(t.score >= 0.0)) throw Error("metric-out-of-range", "task scores must be >= 0");
    total += t.score * t.weight;
  }
  return total;
}

struct OrderMatchResult {
  std::vector<int> matches;  // delta per ground-truth position
  double x = 0.0;

  bool operator==(const OrderMatchResult&) const = default;
};

// Strictly positional comparison: position i matches iff `performed` has an
// element there and it equals expected[i]. Surplus performed entries are
// ignored; missing ones are mismatches.
template <std::ranges::random_access_range Expected, std::ranges::random_access_range Performed>
OrderMatchResult order_accuracy(const Expected& expected, const Performed& performed) {
  const auto n = static_cast<std::size_t>(std::ranges::size(expected));
  if (n == 0) throw Error("empty-ground-truth", "order accuracy needs a non-empty ground-truth sequence");
  const auto m = static_cast<std::size_t>(std::ranges::size(performed));
  OrderMatchResult r;
  r.matches.resize(n, 0);
  auto e = std::ranges::begin(expected);
  auto p = std::ranges::begin(performed);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n && i < m; ++i) {
    if (e[i] == p[i]) {
      r.matches[i] = 1;
      ++hits;
    }
  }
  r.x = static_cast<double>(hits) / static_cast<double>(n);
  return r;
}

inline OrderMatchResult order_accuracy(std::initializer_list<std::string> expected,
                                       std::initializer_list<std::string> performed) {
  return order_accuracy(std::vector<std::string>(expected), std::vector<std::string>(performed));
}

// Fraction of ground-truth situations whose performed action equals the
// correct one. Situations absent from `performed_actions` count as wrong.
inline double action_correctness(std::span<const Situation> situations,
                                 const std::map<std::string, std::string>& performed_actions) {
  if (situations.empty()) throw Error("empty-ground-truth", "action correctness needs at least one situation");
  std::size_t correct = 0;
  for (const auto& s : situations) {
    auto it = performed_actions.find(s.id);
    if (it != performed_actions.end() && it->second == s.correct_action_id) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(situations.size());
}

inline constexpr double kOrderWeight = 0.3;
inline constexpr double kActionWeight = 0.2;
inline constexpr double kJointWeight = 0.25;

// VRTSS = 0.3 X + 0.2 Y + sqrt(0.25 X Y). Already bounded by 1 on [0,1]^2;
// the clamp only absorbs roundoff.
inline double vrtss(double x, double y) {
  if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0))
    throw Error("metric-out-of-range", "VRTSS inputs must lie in [0,1]");
  const double v = kOrderWeight * x + kActionWeight * y + std::sqrt(kJointWeight * x * y);
  return std::clamp(v, 0.0, 1.0);
}

inline double engagement_frequency(std::size_t interaction_count, double session_duration_s) {
  if (!(session_duration_s > 0.0)) throw Error("invalid-duration", "session duration must be > 0");
  return static_cast<double>(interaction_count) / session_duration_s;
}

struct CohortColumnStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  double max = 0.0;

  bool operator==(const CohortColumnStats&) const = default;
};

namespace detail {
// Linear interpolation between closest ranks on sorted data: h = (n-1)p.
inline double quantile_sorted(std::span<const double> sorted, double p) {
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n-1). A single value has no spread: 0.
inline double sample_std(std::span<const double> v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}
}  // namespace detail

inline CohortColumnStats cohort_stats(std::span<const double> values) {
  if (values.empty()) throw Error("empty-cohort", "cohort statistics need at least one value");
  std::vector<double> sorted(values.begin(), values.end());
  std::ranges::sort(sorted);
  CohortColumnStats s;
  s.count = sorted.size();
  s.mean = detail::mean(sorted);
  s.std = detail::sample_std(values, detail::mean(values));
  s.min = sorted.front();
  s.max = sorted.back();
  s.q25 = detail::quantile_sorted(sorted, 0.25);
  s.q50 = detail::quantile_sorted(sorted, 0.50);
  s.q75 = detail::quantile_sorted(sorted, 0.75);
  return s;
}

struct TTestResult {
  double t = 0.0;
  double p = 1.0;
  std::size_t df = 0;
};

// Two-sided one-sample Student t test of H0: mean == mu0.
inline TTestResult one_sample_t_test(std::span<const double> values, double mu0) {
  if (values.size() < 2) throw Error("degenerate-sample", "t test needs at least two values");
  const double m = detail::mean(values);
  const double sd = detail::sample_std(values, m);
  if (!(sd > 0.0)) throw Error("degenerate-sample", "t test needs non-zero sample variance");
  TTestResult r;
  r.df = values.size() - 1;
  r.t = (m - mu0) / (sd / std::sqrt(static_cast<double>(values.size())));
  boost::math::students_t dist(static_cast<double>(r.df));
  r.p = std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t))), 0.0, 1.0);
  return r;
}

}  // namespace trainforge::scoring
