#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "common.hpp"

using namespace trainforge;
using namespace testing_support;
using Catch::Matchers::WithinAbs;

namespace {

const Scenario& sc() { return factory_safety(); }

Move wrong_move(const Prompt& p, double think_s = 1.0) {
  Move m;
  m.think_s = think_s;
  const auto& body = sc().modules()[p.module_index].body;
  if (const auto* mcq = std::get_if<McqSet>(&body)) {
    m.kind = EventKind::AnswerSelected;
    for (const auto& o : p.presented_options) {
      const auto& opts = mcq->items[p.step_index].options;
      if (std::none_of(opts.begin(), opts.end(), [&](const auto& x) { return x.id == o.id && x.correct; }))
        m.payload.choice_id = o.id;
    }
  } else if (std::holds_alternative<IqSet>(body)) {
    m.kind = EventKind::TargetInteracted;
    m.payload.target_ids = {p.presented_options.front().id};
    const auto& item = std::get<IqSet>(body).items[p.step_index];
    if (item.correct_target_ids == m.payload.target_ids) m.payload.target_ids = {p.presented_options.back().id};
  } else {
    const auto& sit = std::get<LiveScenarioSpec>(body).situations[p.step_index];
    m.kind = EventKind::ActionPerformed;
    m.payload.situation_id = sit.id;
    for (const auto& v : p.situations)
      if (v.situation_id == sit.id)
        for (const auto& a : v.actions)
          if (a.id != sit.correct_action_id) m.payload.choice_id = a.id;
  }
  return m;
}

}  // namespace

TEST_CASE("a new session starts at the first step on canonical difficulty") {
  Session s(sc(), 42, SessionMode::Live);
  CHECK(s.cursor() == Cursor{0, 0});
  CHECK(s.difficulty() == DifficultyLevel(2));
  CHECK_FALSE(s.started());
  CHECK(s.next_seq() == 0);
  const auto p = s.next_prompt();
  CHECK(p.step_id == "q1");
  CHECK(p.time_limit_s == 30.0);
}

TEST_CASE("prompts are a pure function of the seed") {
  Session a(sc(), 42, SessionMode::Live), b(sc(), 42, SessionMode::Live);
  CHECK(a.next_prompt() == b.next_prompt());
  bool any_differs = false;
  for (std::uint64_t seed = 1; seed < 20 && !any_differs; ++seed)
    any_differs = Session(sc(), seed, SessionMode::Live).next_prompt() != a.next_prompt();
  CHECK(any_differs);
}

TEST_CASE("option selection per difficulty level") {
  EngineConfig cfg;
  struct Opt {
    bool correct;
    int rank;
  };
  const std::vector<Opt> five{{false, 4}, {true, 0}, {false, 1}, {false, 3}, {false, 2}};
  auto pick = [&](int level) {
    return detail::select_options(
        five, [](const Opt& o) { return o.correct; }, [](const Opt& o) { return o.rank; }, DifficultyLevel(level), cfg);
  };
  // Level 1: one fewer than canonical; level 2: the cap of four; level 3: all.
  CHECK(pick(1) == std::vector<std::size_t>{1, 2, 4});
  CHECK(pick(2) == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK(pick(3) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  const std::vector<Opt> two{{false, 0}, {true, 0}};
  for (int l = 1; l <= 3; ++l)
    CHECK(detail::select_options(
              two, [](const Opt& o) { return o.correct; }, [](const Opt& o) { return o.rank; }, DifficultyLevel(l), cfg)
              .size() == 2);
}

TEST_CASE("scripted failures step difficulty down, fast successes step it up") {
  SECTION("three failures: 2 -> 1") {
    Session s(sc(), 42, SessionMode::Live);
    EventWriter w;
    start(s, w);
    std::vector<DifficultyChange> changes;
    play(s, w, [&](const Prompt& p) {
      return p.module_kind == ModuleKind::Live ? wrong_move(p, 40.0) : correct_move(sc(), p);
    });
    const auto m = s.finalize();
    REQUIRE(m.difficulty_changes.size() == 1);
    CHECK(m.difficulty_changes[0].from == DifficultyLevel(2));
    CHECK(m.difficulty_changes[0].to == DifficultyLevel(1));
    CHECK(m.final_difficulty == DifficultyLevel(1));
  }
  SECTION("three fast correct answers: 2 -> 3") {
    Session s(sc(), 42, SessionMode::Live);
    EventWriter w;
    start(s, w);
    play(s, w, [&](const Prompt& p) { return correct_move(sc(), p, 2.0); });
    const auto m = s.finalize();
    REQUIRE(m.difficulty_changes.size() == 1);
    CHECK(m.difficulty_changes[0].from == DifficultyLevel(2));
    CHECK(m.difficulty_changes[0].to == DifficultyLevel(3));
  }
  SECTION("slow correct answers hold the level") {
    Session s(sc(), 42, SessionMode::Live);
    EventWriter w;
    start(s, w);
    play(s, w, [&](const Prompt& p) { return correct_move(sc(), p, p.time_limit_s * 0.9); });
    CHECK(s.finalize().difficulty_changes.empty());
  }
}

TEST_CASE("adaptation window") {
  EngineConfig cfg;
  AdaptationState st;
  st.record({false, false}, 3);
  st.record({false, false}, 3);
  CHECK_FALSE(adapt(st, cfg));
  st.record({true, true}, 3);
  CHECK_FALSE(adapt(st, cfg));
  st.record({false, false}, 3);
  st.record({false, false}, 3);
  CHECK_FALSE(adapt(st, cfg));  // window is {fast, fail, fail}
  st.record({false, false}, 3);
  auto c = adapt(st, cfg);
  REQUIRE(c);
  CHECK(c->second == DifficultyLevel(1));
  CHECK(st.window.empty());
  for (int i = 0; i < 3; ++i) st.record({false, false}, 3);
  CHECK_FALSE(adapt(st, cfg));
  CHECK(st.level == DifficultyLevel(1));
}

TEST_CASE("worked live check: swapped situations") {
  Session s(sc(), 42, SessionMode::Live);
  EventWriter w;
  start(s, w);
  const std::vector<std::string> order{"s1", "s3", "s2", "s4", "s5"};
  play(s, w, [&](const Prompt& p) {
    Move m = correct_move(sc(), p, 20.0);
    if (p.module_kind == ModuleKind::Live) {
      const auto& live = std::get<LiveScenarioSpec>(sc().modules()[p.module_index].body);
      for (const auto& sit : live.situations)
        if (sit.id == order[p.step_index]) {
          m.payload.situation_id = sit.id;
          m.payload.choice_id = sit.correct_action_id;
        }
    }
    return m;
  });
  const auto m = s.finalize();
  const auto& live = m.per_subtask[2];
  CHECK(live.matches == std::vector<int>{1, 0, 0, 1, 1});
  CHECK_THAT(*live.order_accuracy_X, WithinAbs(0.6, 1e-12));
  CHECK_THAT(*live.action_correctness_Y, WithinAbs(1.0, 1e-12));
  CHECK_THAT(*live.vrtss, WithinAbs(0.7673, 1e-4));
  CHECK(live.success_rate == 1.0);
}

TEST_CASE("prompts always contain the correct answer") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Session s(sc(), seed, SessionMode::Live);
    EventWriter w;
    start(s, w);
    play(s, w, [&](const Prompt& p) {
      const Move right = correct_move(sc(), p);
      if (p.module_kind == ModuleKind::Mcq) {
        REQUIRE(std::any_of(p.presented_options.begin(), p.presented_options.end(),
                            [&](const auto& o) { return o.id == *right.payload.choice_id; }));
      } else if (p.module_kind == ModuleKind::Live) {
        for (const auto& v : p.situations)
          REQUIRE(std::any_of(v.actions.begin(), v.actions.end(), [&](const auto& a) {
            const auto& sits = std::get<LiveScenarioSpec>(sc().modules()[p.module_index].body).situations;
            return std::any_of(sits.begin(), sits.end(), [&](const auto& si) { return si.id == v.situation_id && si.correct_action_id == a.id; });
          }));
      }
      return seed % 2 ? right : wrong_move(p, 2.0);
    });
  }
}

TEST_CASE("timeouts and hints") {
  Session s(sc(), 5, SessionMode::Live);
  EventWriter w;
  start(s, w);
  int step = 0;
  play(s, w, [&](const Prompt& p) {
    Move m = correct_move(sc(), p, 10.0);
    m.hint = step == 0;
    if (step++ % 3 == 1) m.kind = EventKind::StepTimedOut;
    if (m.kind == EventKind::StepTimedOut) m.think_s = p.time_limit_s;
    return m;
  });
  const auto m = s.finalize();
  const auto& mcq = m.per_subtask[0];
  CHECK(mcq.steps == 5);
  CHECK(mcq.completed == 3);  // steps 1 and 4 timed out
  CHECK_THAT(mcq.completion_rate, WithinAbs(0.6, 1e-12));
  CHECK_THAT(mcq.avg_task_time_s, WithinAbs((10.1 + 10.0 + 10.0) / 3, 1e-9));  // the hint adds 0.1 s to step 0
  CHECK(mcq.success_rate == 0.6);
  const auto& live = m.per_subtask[2];
  CHECK(std::count(live.matches->begin(), live.matches->end(), 0) > 0);
}

TEST_CASE("aborting mid-step records an incomplete step") {
  Session s(sc(), 9, SessionMode::Live);
  EventWriter w;
  start(s, w);
  auto& shown = w.push(EventKind::PromptShown, 1);
  shown.payload.step_id = "q1";
  s.submit(shown);
  auto& end = w.push(EventKind::SessionEnded, 3);
  end.payload.reason = "closed";
  const auto out = s.submit(end);
  CHECK(out.session_finished);
  REQUIRE(out.step_result);
  CHECK(out.step_result->completed == 0);
  const auto m = s.finalize();
  CHECK(m.aborted);
  CHECK(m.per_subtask[0].steps == 1);
  CHECK(m.per_subtask[0].completion_rate == 0.0);
  CHECK(m.per_subtask[2].order_accuracy_X == 0.0);
}

TEST_CASE("protocol violations leave the session untouched") {
  Session s(sc(), 42, SessionMode::Live);
  EventWriter w;
  start(s, w);
  auto expect_code = [&](SessionEvent e, const char* code) {
    const Session before = s;
    try {
      s.submit(e);
      FAIL("expected " << code);
    } catch (const Error& err) {
      CHECK(err.code() == code);
      CHECK(err.seq == e.seq);
    }
    CHECK(s.next_seq() == before.next_seq());
    CHECK(s.cursor() == before.cursor());
    CHECK(s.prompt_active() == before.prompt_active());
  };
  SessionEvent e;
  e.session_id = s.id();
  e.seq = 1;
  e.timestamp_s = 1.0;
  e.kind = EventKind::AnswerSelected;
  e.payload.step_id = "q1";
  e.payload.choice_id = "q1-a";
  expect_code(e, "protocol-violation");  // no prompt yet

  e.kind = EventKind::PromptShown;
  e.payload = {};
  e.payload.step_id = "q2";
  expect_code(e, "protocol-violation");  // wrong step

  e.payload.step_id = "q1";
  e.seq = 2;
  expect_code(e, "sequence-gap");
  e.seq = 1;
  e.timestamp_s = -1;
  expect_code(e, "time-regression");
  e.timestamp_s = 1;
  e.session_id = "other";
  expect_code(e, "session-mismatch");
  e.session_id = s.id();
  s.submit(e);

  SessionEvent a = e;
  a.seq = 2;
  a.kind = EventKind::AnswerSelected;
  a.payload.choice_id = "q1-zzz";
  expect_code(a, "protocol-violation");  // not presented
  a.kind = EventKind::ActionPerformed;
  a.payload.situation_id = "s1";
  a.payload.choice_id = "s1-stop";
  expect_code(a, "protocol-violation");  // wrong module kind
  a.kind = EventKind::SessionStarted;
  expect_code(a, "protocol-violation");

  SessionEvent end = a;
  end.kind = EventKind::SessionEnded;
  end.payload = {};
  s.submit(end);
  SessionEvent after = end;
  after.seq = 3;
  after.kind = EventKind::PromptShown;
  expect_code(after, "session-ended");
  CHECK_NOTHROW(s.finalize());
}

TEST_CASE("finalize requires an ended session") {
  Session s(sc(), 1, SessionMode::Live);
  try {
    s.finalize();
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "session-active");
  }
}

TEST_CASE("replay reproduces the live run") {
  for (std::uint64_t seed : {1ULL, 42ULL, 9999ULL}) {
    Session s(sc(), seed, SessionMode::Live);
    EventWriter w;
    start(s, w);
    int step = 0;
    play(s, w, [&](const Prompt& p) { return step++ % 4 == 2 ? wrong_move(p, 7.0) : correct_move(sc(), p, 3.0 + step); });
    const auto live = s.finalize();
    const auto again = replay(sc(), w.events, seed);
    CHECK(again == live);
    CHECK(canonical(again) == canonical(live));
  }
}

TEST_CASE("replay rejects logs for a different seed or scenario, and truncated logs") {
  Session s(sc(), 42, SessionMode::Live);
  EventWriter w;
  start(s, w);
  play(s, w, [&](const Prompt& p) { return correct_move(sc(), p); });
  try {
    replay(sc(), w.events, 43);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "seed-mismatch");
  }
  auto other = w.events;
  other[0].payload.scenario_id = "elsewhere";
  CHECK_THROWS_AS(replay(sc(), other, 42), Error);
  auto cut = w.events;
  cut.resize(cut.size() - 1);
  try {
    replay(sc(), cut, 42);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.code() == "truncated-log");
  }
}

TEST_CASE("replay of fixture traces") {
  auto load = [](const std::string& name) { return parse_event_log(read_file(fixture("traces/" + name))); };
  const auto fast = replay(sc(), load("mcq-fast.trace"), 42);
  CHECK_THAT(fast.per_subtask[0].avg_task_time_s, WithinAbs(20.0, 1e-3));
  const auto perfect = replay(sc(), load("perfect.trace"), 42);
  CHECK(perfect.per_subtask[0].success_rate == 1.0);
  CHECK_THAT(*perfect.per_subtask[2].vrtss, WithinAbs(1.0, 1e-12));
  const auto swap = replay(sc(), load("live-swap.trace"), 42);
  CHECK_THAT(*swap.per_subtask[2].vrtss, WithinAbs(0.7673, 1e-4));
}
