#pragma once

// Cohort reports over stored sessions. Two tables:
//  * per-metric descriptive statistics (count/mean/std/min/25%/50%/75%/max),
//  * per-subtask VRTSS mean/std/p-value and pooled success rate.
// Metrics are always recomputed from the event logs; stored metrics.json
// files are only compared against the recomputation.

#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trainforge/core.hpp"
#include "trainforge/engine.hpp"
#include "trainforge/metrics_store.hpp"
#include "trainforge/scoring.hpp"

namespace trainforge {

struct ReportFilter {
  std::optional<std::string> scenario_id;
  std::optional<int> scenario_version;
  std::optional<std::set<std::string>> session_ids;
};

struct ReportOptions {
  double mu0 = 0.5;  // null-hypothesis mean for the VRTSS t test
  EngineConfig engine;
};

struct MetricColumn {
  std::string name;
  scoring::CohortColumnStats stats;

  bool operator==(const MetricColumn&) const = default;
};

struct SubtaskSummary {
  std::string label;
  ModuleKind module_kind = ModuleKind::Mcq;
  std::size_t sessions = 0;
  std::size_t successes = 0;
  std::size_t attempts = 0;
  double success_rate = 0.0;
  std::optional<double> vrtss_mean;
  std::optional<double> vrtss_std;
  std::optional<double> vrtss_t;
  std::optional<double> vrtss_p;

  bool operator==(const SubtaskSummary&) const = default;
};

struct CohortReport {
  std::string scenario_id;
  std::vector<int> scenario_versions;
  std::vector<std::string> session_ids;
  std::vector<MetricColumn> columns;
  std::vector<SubtaskSummary> subtasks;
  std::vector<std::string> mismatched_sessions;  // stored metrics.json != recomputation
  std::vector<std::string> footnotes;
  double mu0 = 0.5;
  std::string test = "one-sample two-sided Student t test";

  bool operator==(const CohortReport&) const = default;
};

inline std::string format_percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", fraction * 100.0);
  return buf;
}

inline std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Ordered metric columns and their per-session values. Shared by the report
// builder and anything that wants the same column layout.
inline std::vector<std::pair<std::string, double>> metric_cells(const SessionMetrics& m) {
  std::vector<std::pair<std::string, double>> cells;
  for (const auto& s : m.per_subtask) {
    cells.emplace_back(s.label + " success_rate", s.success_rate);
    cells.emplace_back(s.label + " completion_rate", s.completion_rate);
    cells.emplace_back(s.label + " avg_task_time_s", s.avg_task_time_s);
    cells.emplace_back(s.label + " weighted_score", s.weighted_score);
    if (s.order_accuracy_X) cells.emplace_back(s.label + " X", *s.order_accuracy_X);
    if (s.action_correctness_Y) cells.emplace_back(s.label + " Y", *s.action_correctness_Y);
    if (s.vrtss) cells.emplace_back(s.label + " VRTSS", *s.vrtss);
  }
  cells.emplace_back("engagement_per_s", m.engagement_frequency);
  cells.emplace_back("total_duration_s", m.total_duration_s);
  return cells;
}

inline CohortReport build_report(const MetricsStore& store, const ReportFilter& filter, const ReportOptions& opts = {}) {
  std::string scenario_id;
  if (filter.scenario_id) {
    scenario_id = *filter.scenario_id;
  } else {
    std::set<std::string> ids;
    for (const auto& sid : store.sessions()) ids.insert(store.load_trace(sid).scenario_id);
    if (ids.empty()) throw Error("empty-cohort", "store holds no sessions");
    if (ids.size() > 1) throw Error("ambiguous-scenario", "store holds several scenarios; pass a scenario id");
    scenario_id = *ids.begin();
  }

  CohortReport r;
  r.scenario_id = scenario_id;
  r.mu0 = opts.mu0;
  std::vector<std::string> column_order;
  std::map<std::string, std::vector<double>> columns;
  std::vector<std::string> subtask_order;
  std::map<std::string, SubtaskSummary> subtasks;
  std::map<std::string, std::vector<double>> vrtss_values;
  std::set<int> versions;
  std::map<int, std::optional<Scenario>> scenarios;

  for (const auto& sid : store.sessions(scenario_id)) {
    if (filter.session_ids && !filter.session_ids->count(sid)) continue;
    TraceBundle b = store.load_trace(sid);
    if (!b.metrics) continue;  // not finalized
    if (filter.scenario_version && b.scenario_version != *filter.scenario_version) continue;
    auto& sc = scenarios[b.scenario_version];
    if (!sc) sc = store.get_scenario(scenario_id, b.scenario_version);
    if (!sc) throw Error("not-found", "scenario '" + scenario_id + "' version " + std::to_string(b.scenario_version) + " is not stored");

    const SessionMetrics m = replay(*sc, b.events, b.seed, opts.engine);
    if (canonical(m) != canonical(*b.metrics)) r.mismatched_sessions.push_back(sid);
    r.session_ids.push_back(sid);
    versions.insert(b.scenario_version);

    for (const auto& [name, v] : metric_cells(m)) {
      if (!columns.count(name)) column_order.push_back(name);
      columns[name].push_back(v);
    }
    for (const auto& s : m.per_subtask) {
      if (!subtasks.count(s.label)) {
        subtask_order.push_back(s.label);
        subtasks[s.label].label = s.label;
        subtasks[s.label].module_kind = s.module_kind;
      }
      auto& sum = subtasks[s.label];
      ++sum.sessions;
      sum.successes += s.successes;
      sum.attempts += s.steps;
      if (s.vrtss) vrtss_values[s.label].push_back(*s.vrtss);
    }
  }
  if (r.session_ids.empty()) throw Error("empty-cohort", "no finalized sessions match the filter");
  r.scenario_versions.assign(versions.begin(), versions.end());

  for (const auto& name : column_order) r.columns.push_back({name, scoring::cohort_stats(columns[name])});

  bool degenerate_p = false;
  for (const auto& label : subtask_order) {
    auto s = subtasks[label];
    s.success_rate = s.attempts ? scoring::success_rate(s.successes, s.attempts) : 0.0;
    if (auto it = vrtss_values.find(label); it != vrtss_values.end()) {
      const auto st = scoring::cohort_stats(it->second);
      s.vrtss_mean = st.mean;
      s.vrtss_std = st.std;
      try {
        const auto tt = scoring::one_sample_t_test(it->second, opts.mu0);
        s.vrtss_t = tt.t;
        s.vrtss_p = tt.p;
      } catch (const Error&) {
        degenerate_p = true;
      }
    }
    r.subtasks.push_back(std::move(s));
  }

  if (r.session_ids.size() == 1) r.footnotes.push_back("single-session cohort: std reported as 0");
  r.footnotes.push_back("std is the sample standard deviation (n-1); quartiles interpolate linearly between closest ranks");
  r.footnotes.push_back("VRTSS p-value: " + r.test + " against mu0 = " + format_fixed(opts.mu0, 4));
  if (degenerate_p) r.footnotes.push_back("p-value n/a where the VRTSS sample has fewer than 2 sessions or zero variance");
  r.footnotes.push_back("success rate pools successes over attempted steps across sessions");
  if (!r.mismatched_sessions.empty())
    r.footnotes.push_back(std::to_string(r.mismatched_sessions.size()) + " session(s) have stored metrics that differ from recomputation");
  return r;
}

// ---- rendering ----

namespace detail {
inline std::string pad_right(const std::string& s, std::size_t w) { return s.size() >= w ? s : s + std::string(w - s.size(), ' '); }
inline std::string pad_left(const std::string& s, std::size_t w) { return s.size() >= w ? s : std::string(w - s.size(), ' ') + s; }

inline std::string grid(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> w(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) w[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size(); ++c) w[c] = std::max(w[c], row[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os << "  ";
      os << (c == 0 ? pad_right(cells[c], w[c]) : pad_left(cells[c], w[c]));
    }
    os << "\n";
  };
  line(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  os << std::string(total + 2 * (w.size() - 1), '-') << "\n";
  for (const auto& row : rows) line(row);
  return os.str();
}
}  // namespace detail

inline std::string render_text(const CohortReport& r) {
  std::ostringstream os;
  os << "Cohort report: " << r.scenario_id << " (versions:";
  for (int v : r.scenario_versions) os << " " << v;
  os << "), " << r.session_ids.size() << " session(s)\n\n";

  os << "Session metrics\n";
  std::vector<std::string> header{""};
  for (const auto& c : r.columns) header.push_back(c.name);
  const char* stat_names[] = {"count", "mean", "std", "min", "25%", "50%", "75%", "max"};
  std::vector<std::vector<std::string>> rows;
  for (int s = 0; s < 8; ++s) {
    std::vector<std::string> row{stat_names[s]};
    for (const auto& c : r.columns) {
      const auto& st = c.stats;
      const double vals[] = {static_cast<double>(st.count), st.mean, st.std, st.min, st.q25, st.q50, st.q75, st.max};
      row.push_back(format_fixed(vals[s], 2));
    }
    rows.push_back(std::move(row));
  }
  os << detail::grid(header, rows) << "\n";

  os << "Subtask summary\n";
  std::vector<std::string> h2{"SubTask"};
  for (const auto& s : r.subtasks) h2.push_back(s.label);
  auto opt4 = [](const std::optional<double>& v) { return v ? format_fixed(*v, 4) : std::string("n/a"); };
  std::vector<std::vector<std::string>> rows2(4);
  rows2[0] = {"VRTSS mean"};
  rows2[1] = {"VRTSS std"};
  rows2[2] = {"VRTSS P-Value"};
  rows2[3] = {"Success Rate (%)"};
  for (const auto& s : r.subtasks) {
    rows2[0].push_back(opt4(s.vrtss_mean));
    rows2[1].push_back(opt4(s.vrtss_std));
    rows2[2].push_back(opt4(s.vrtss_p));
    rows2[3].push_back(format_percent(s.success_rate));
  }
  os << detail::grid(h2, rows2);

  if (!r.mismatched_sessions.empty()) {
    os << "\nMismatched sessions:";
    for (const auto& s : r.mismatched_sessions) os << " " << s;
    os << "\n";
  }
  os << "\n";
  for (std::size_t i = 0; i < r.footnotes.size(); ++i) os << "[" << (i + 1) << "] " << r.footnotes[i] << "\n";
  return os.str();
}

namespace scoring {
inline void to_json(json& j, const CohortColumnStats& s) {
  j = json{{"count", s.count}, {"mean", s.mean}, {"std", s.std}, {"min", s.min},
           {"q25", s.q25},     {"q50", s.q50},   {"q75", s.q75}, {"max", s.max}};
}
inline void from_json(const json& j, CohortColumnStats& s) {
  j.at("count").get_to(s.count);
  j.at("mean").get_to(s.mean);
  j.at("std").get_to(s.std);
  j.at("min").get_to(s.min);
  j.at("q25").get_to(s.q25);
  j.at("q50").get_to(s.q50);
  j.at("q75").get_to(s.q75);
  j.at("max").get_to(s.max);
}
}  // namespace scoring

inline void to_json(json& j, const MetricColumn& c) { j = json{{"name", c.name}, {"stats", c.stats}}; }
inline void from_json(const json& j, MetricColumn& c) {
  j.at("name").get_to(c.name);
  j.at("stats").get_to(c.stats);
}

inline void to_json(json& j, const SubtaskSummary& s) {
  j = json{{"label", s.label},
           {"module_kind", s.module_kind},
           {"sessions", s.sessions},
           {"successes", s.successes},
           {"attempts", s.attempts},
           {"success_rate", s.success_rate},
           {"success_rate_pct", format_percent(s.success_rate)}};
  detail::put_opt(j, "vrtss_mean", s.vrtss_mean);
  detail::put_opt(j, "vrtss_std", s.vrtss_std);
  detail::put_opt(j, "vrtss_t", s.vrtss_t);
  detail::put_opt(j, "vrtss_p", s.vrtss_p);
}
inline void from_json(const json& j, SubtaskSummary& s) {
  j.at("label").get_to(s.label);
  j.at("module_kind").get_to(s.module_kind);
  j.at("sessions").get_to(s.sessions);
  j.at("successes").get_to(s.successes);
  j.at("attempts").get_to(s.attempts);
  j.at("success_rate").get_to(s.success_rate);
  detail::get_opt(j, "vrtss_mean", s.vrtss_mean);
  detail::get_opt(j, "vrtss_std", s.vrtss_std);
  detail::get_opt(j, "vrtss_t", s.vrtss_t);
  detail::get_opt(j, "vrtss_p", s.vrtss_p);
}

inline void to_json(json& j, const CohortReport& r) {
  j = json{{"format", "trainforge.cohort-report/1"},
           {"scenario_id", r.scenario_id},
           {"scenario_versions", r.scenario_versions},
           {"session_ids", r.session_ids},
           {"columns", r.columns},
           {"subtasks", r.subtasks},
           {"mismatched_sessions", r.mismatched_sessions},
           {"footnotes", r.footnotes},
           {"mu0", r.mu0},
           {"test", r.test}};
}
inline void from_json(const json& j, CohortReport& r) {
  j.at("scenario_id").get_to(r.scenario_id);
  j.at("scenario_versions").get_to(r.scenario_versions);
  j.at("session_ids").get_to(r.session_ids);
  j.at("columns").get_to(r.columns);
  j.at("subtasks").get_to(r.subtasks);
  j.at("mismatched_sessions").get_to(r.mismatched_sessions);
  j.at("footnotes").get_to(r.footnotes);
  j.at("mu0").get_to(r.mu0);
  j.at("test").get_to(r.test);
}

}  // namespace trainforge
