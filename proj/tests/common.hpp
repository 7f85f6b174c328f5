#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "trainforge/trainforge.hpp"

namespace testing_support {

inline std::string fixture(const std::string& rel) { return std::string(TF_FIXTURES_DIR) + "/" + rel; }

inline const trainforge::Scenario& factory_safety() {
  static const trainforge::Scenario s = trainforge::load_scenario(fixture("factory-safety.scn"));
  return s;
}

// A scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path = std::filesystem::temp_directory_path() / ("tf-test-" + std::to_string(rng()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

// Builds events for a session one at a time with monotonically increasing
// seq and timestamps.
struct EventWriter {
  std::string session_id;
  std::uint64_t seq = 0;
  double clock = 0.0;
  std::vector<trainforge::SessionEvent> events;

  trainforge::SessionEvent& push(trainforge::EventKind k, double dt = 0.0) {
    clock += dt;
    trainforge::SessionEvent e;
    e.session_id = session_id;
    e.seq = seq++;
    e.timestamp_s = clock;
    e.kind = k;
    events.push_back(e);
    return events.back();
  }
};

// What a scripted trainee does with a prompt.
struct Move {
  trainforge::EventKind kind = trainforge::EventKind::StepTimedOut;
  trainforge::EventPayload payload;
  double think_s = 1.0;
  bool hint = false;
};

// Plays every remaining step: PromptShown, optional HintShown, then the
// move chosen by `policy`. Events go through the session and the writer.
template <class Policy>
void play(trainforge::Session& s, EventWriter& w, Policy policy) {
  using trainforge::EventKind;
  while (!s.ended()) {
    const auto p = s.next_prompt();
    auto& shown = w.push(EventKind::PromptShown, 0.5);
    shown.payload.step_id = p.step_id;
    s.submit(shown);
    Move m = policy(p);
    if (m.hint) {
      auto& h = w.push(EventKind::HintShown, 0.1);
      h.payload.step_id = p.step_id;
      s.submit(h);
    }
    auto& e = w.push(m.kind, m.think_s);
    e.payload = m.payload;
    e.payload.step_id = p.step_id;
    s.submit(e);
  }
}

inline trainforge::SessionEvent& start(trainforge::Session& s, EventWriter& w) {
  w.session_id = s.id();
  auto& e = w.push(trainforge::EventKind::SessionStarted);
  e.payload.seed = s.seed();
  e.payload.scenario_id = s.scenario().id();
  e.payload.scenario_version = s.scenario().version();
  s.submit(e);
  return e;
}

// The right answer for any prompt; live steps take situations in
// ground-truth order.
inline Move correct_move(const trainforge::Scenario& sc, const trainforge::Prompt& p, double think_s = 1.0) {
  using namespace trainforge;
  Move m;
  m.think_s = think_s;
  const auto& body = sc.modules()[p.module_index].body;
  if (const auto* mcq = std::get_if<McqSet>(&body)) {
    m.kind = EventKind::AnswerSelected;
    for (const auto& o : mcq->items[p.step_index].options)
      if (o.correct) m.payload.choice_id = o.id;
  } else if (const auto* iq = std::get_if<IqSet>(&body)) {
    m.kind = EventKind::TargetInteracted;
    m.payload.target_ids = iq->items[p.step_index].correct_target_ids;
  } else {
    const auto& sit = std::get<LiveScenarioSpec>(body).situations[p.step_index];
    m.kind = EventKind::ActionPerformed;
    m.payload.situation_id = sit.id;
    m.payload.choice_id = sit.correct_action_id;
  }
  return m;
}

}  // namespace testing_support
