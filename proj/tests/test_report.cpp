#include <catch2/catch_amalgamated.hpp>

#include "common.hpp"
#include "oracle.hpp"

using namespace trainforge;
using namespace testing_support;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
namespace fs = std::filesystem;

namespace {

struct OracleCohort {
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> columns;
  std::map<std::string, std::pair<std::size_t, std::size_t>> success;  // label -> (successes, attempts)
  std::map<std::string, std::vector<double>> vrtss;
};

OracleCohort oracle_over(const fs::path& store_root, const std::string& scenario_id) {
  OracleCohort c;
  const auto scn = oracle::read_scn((store_root / scenario_id / "scenario-v1.scn").string());
  std::vector<fs::path> sessions;
  for (const auto& d : fs::directory_iterator(store_root / scenario_id))
    if (d.is_directory()) sessions.push_back(d.path());
  std::sort(sessions.begin(), sessions.end());
  for (const auto& dir : sessions) {
    const auto r = oracle::recompute(scn, oracle::read_log((dir / "events.jsonl").string()));
    for (const auto& [name, v] : oracle::cells(r)) {
      if (!c.columns.count(name)) c.names.push_back(name);
      c.columns[name].push_back(v);
    }
    for (const auto& m : r.modules) {
      c.success[m.label].first += m.correct;
      c.success[m.label].second += m.steps;
      if (m.live) c.vrtss[m.label].push_back(m.vrtss);
    }
  }
  return c;
}

}  // namespace

TEST_CASE("percent format") {
  CHECK(format_percent(0.4) == "40.00%");
  CHECK(format_percent(1.0) == "100.00%");
  CHECK(format_percent(0.123456) == "12.35%");
  CHECK(format_fixed(0.5, 4) == "0.5000");
}

TEST_CASE("cohort-A report equals a brute-force recomputation") {
  const fs::path root = fixture("cohort-A");
  MetricsStore store(root);
  const auto r = build_report(store, {});
  const auto o = oracle_over(root, "factory-safety");
  CHECK(r.session_ids.size() == 5);
  CHECK(r.mismatched_sessions.empty());
  REQUIRE(r.columns.size() == o.names.size());
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    const auto& col = r.columns[i];
    INFO(col.name);
    REQUIRE(col.name == o.names[i]);
    const auto s = oracle::stats(o.columns.at(col.name));
    CHECK(col.stats.count == 5);
    CHECK_THAT(col.stats.mean, WithinAbs(s.mean, 1e-9));
    CHECK_THAT(col.stats.std, WithinAbs(s.std, 1e-9));
    CHECK_THAT(col.stats.min, WithinAbs(s.min, 1e-9));
    CHECK_THAT(col.stats.q25, WithinAbs(s.q25, 1e-9));
    CHECK_THAT(col.stats.q50, WithinAbs(s.q50, 1e-9));
    CHECK_THAT(col.stats.q75, WithinAbs(s.q75, 1e-9));
    CHECK_THAT(col.stats.max, WithinAbs(s.max, 1e-9));
  }
  for (const auto& st : r.subtasks) {
    const auto [ok, n] = o.success.at(st.label);
    CHECK_THAT(st.success_rate, WithinAbs(double(ok) / double(n), 1e-9));
    if (o.vrtss.count(st.label)) {
      const auto& v = o.vrtss.at(st.label);
      const auto s = oracle::stats(v);
      CHECK_THAT(*st.vrtss_mean, WithinAbs(s.mean, 1e-9));
      CHECK_THAT(*st.vrtss_std, WithinAbs(s.std, 1e-9));
      const double t = oracle::t_stat(v, 0.5);
      CHECK_THAT(*st.vrtss_t, WithinAbs(t, 1e-9));
      CHECK_THAT(*st.vrtss_p, WithinAbs(oracle::t_pvalue(t, double(v.size() - 1)), 1e-9));
    } else {
      CHECK_FALSE(st.vrtss_mean);
    }
  }
}

TEST_CASE("text rendering lays out both tables") {
  MetricsStore store(fixture("cohort-A"));
  const auto text = render_text(build_report(store, {}));
  for (const char* row : {"count", "mean", "std", "min", "25%", "50%", "75%", "max", "VRTSS mean", "VRTSS std",
                          "VRTSS P-Value", "Success Rate (%)", "SubTask", "MCQ", "Interactive", "LiveScenario"})
    CHECK_THAT(text, ContainsSubstring(row));
  CHECK_THAT(text, ContainsSubstring("n/a"));
}

TEST_CASE("machine format round-trips") {
  MetricsStore store(fixture("cohort-A"));
  const auto r = build_report(store, {});
  const auto back = json::parse(json(r).dump()).get<CohortReport>();
  CHECK(back == r);
}

TEST_CASE("empty stores and filters") {
  TempDir dir;
  MetricsStore store(dir.path);
  try {
    build_report(store, {});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "empty-cohort");
  }

  TraineeProfile p;
  p.answer_accuracy = 0.6;
  p.sequencing_fidelity = 0.6;
  auto v2data = factory_safety().data();
  v2data.version = 2;
  const auto v2 = Scenario::create(v2data);
  for (std::uint64_t k = 0; k < 3; ++k) persist(store, factory_safety(), simulate(p, factory_safety(), k));
  for (std::uint64_t k = 10; k < 12; ++k) persist(store, v2, simulate(p, v2, k));

  ReportFilter f;
  f.scenario_version = 2;
  const auto r2 = build_report(store, f);
  CHECK(r2.session_ids.size() == 2);
  CHECK(r2.scenario_versions == std::vector<int>{2});
  for (const auto& id : r2.session_ids) CHECK(store.load_trace(id).scenario_version == 2);
  f.scenario_version = 1;
  CHECK(build_report(store, f).session_ids.size() == 3);
  CHECK(build_report(store, {}).session_ids.size() == 5);
  f.scenario_version = 9;
  CHECK_THROWS_AS(build_report(store, f), Error);
}

TEST_CASE("tampered stored metrics are flagged") {
  TempDir dir;
  fs::copy(fixture("cohort-A"), dir.path, fs::copy_options::recursive);
  MetricsStore store(dir.path);
  const auto id = store.sessions().front();
  auto m = *store.load_trace(id).metrics;
  m.total_duration_s += 1;
  store.write_metrics(id, m);
  const auto r = build_report(store, {});
  CHECK(r.mismatched_sessions == std::vector<std::string>{id});
}
