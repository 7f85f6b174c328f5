#pragma once

// Session-side domain types: difficulty, events, step results and metric
// records, with their JSON encodings.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trainforge/error.hpp"
#include "trainforge/scenario.hpp"

namespace trainforge {

using json = nlohmann::json;

class DifficultyLevel {
public:
  static constexpr int kMin = 1;
  static constexpr int kMax = 3;

  constexpr DifficultyLevel() = default;
  explicit DifficultyLevel(int level) : level_(level) {
    if (level < kMin || level > kMax)
      throw Error("difficulty-out-of-range", "difficulty level must be in [1,3], got " + std::to_string(level));
  }

  static constexpr DifficultyLevel assisted() { return DifficultyLevel(Raw{1}); }
  static constexpr DifficultyLevel canonical() { return DifficultyLevel(Raw{2}); }
  static constexpr DifficultyLevel challenge() { return DifficultyLevel(Raw{3}); }

  constexpr int value() const { return level_; }
  constexpr DifficultyLevel easier() const { return DifficultyLevel(Raw{level_ > kMin ? level_ - 1 : kMin}); }
  constexpr DifficultyLevel harder() const { return DifficultyLevel(Raw{level_ < kMax ? level_ + 1 : kMax}); }

  constexpr auto operator<=>(const DifficultyLevel&) const = default;

private:
  struct Raw {
    int v;
  };
  constexpr explicit DifficultyLevel(Raw r) : level_(r.v) {}
  int level_ = 2;
};

enum class EventKind {
  SessionStarted,
  PromptShown,
  AnswerSelected,
  TargetInteracted,
  ActionPerformed,
  StepTimedOut,
  HintShown,
  SessionEnded,
};

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::SessionStarted: return "SessionStarted";
    case EventKind::PromptShown: return "PromptShown";
    case EventKind::AnswerSelected: return "AnswerSelected";
    case EventKind::TargetInteracted: return "TargetInteracted";
    case EventKind::ActionPerformed: return "ActionPerformed";
    case EventKind::StepTimedOut: return "StepTimedOut";
    case EventKind::HintShown: return "HintShown";
    case EventKind::SessionEnded: return "SessionEnded";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(EventKind::SessionEnded); ++i) {
    auto k = static_cast<EventKind>(i);
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

// Trainee interactions counted by the engagement-frequency metric.
inline bool is_interaction(EventKind k) {
  return k == EventKind::AnswerSelected || k == EventKind::TargetInteracted || k == EventKind::ActionPerformed;
}

struct EventPayload {
  std::optional<std::string> step_id;       // every step-scoped event
  std::optional<std::string> situation_id;  // ActionPerformed
  std::optional<std::string> choice_id;     // AnswerSelected option / ActionPerformed action
  std::vector<std::string> target_ids;      // TargetInteracted
  std::optional<std::uint64_t> seed;        // SessionStarted
  std::optional<std::string> scenario_id;   // SessionStarted
  std::optional<int> scenario_version;      // SessionStarted
  std::optional<std::string> reason;        // SessionEnded

  bool operator==(const EventPayload&) const = default;
};

struct SessionEvent {
  std::string session_id;
  std::uint64_t seq = 0;
  double timestamp_s = 0.0;
  EventKind kind = EventKind::SessionStarted;
  EventPayload payload;

  bool operator==(const SessionEvent&) const = default;
};

struct StepResult {
  std::string item_ref;
  ModuleKind module_kind = ModuleKind::Mcq;
  std::size_t module_index = 0;
  int completed = 0;  // C: 1 iff an answer/action was submitted before timeout
  bool correct = false;
  double duration_s = 0.0;
  double time_limit_s = 0.0;
  double weight = 1.0;
  std::optional<std::string> chosen_id;
  std::optional<int> position_matched;  // delta, live steps only
  DifficultyLevel difficulty_at_step;

  bool operator==(const StepResult&) const = default;
};

struct SubtaskMetrics {
  std::string label;
  ModuleKind module_kind = ModuleKind::Mcq;
  std::size_t steps = 0;  // attempted steps (answered or timed out)
  std::size_t completed = 0;
  std::size_t successes = 0;
  double completion_rate = 0.0;
  double avg_task_time_s = 0.0;
  double success_rate = 0.0;
  double weighted_score = 0.0;
  std::optional<std::vector<int>> matches;  // delta per ground-truth position
  std::optional<double> order_accuracy_X;
  std::optional<double> action_correctness_Y;
  std::optional<double> vrtss;

  bool operator==(const SubtaskMetrics&) const = default;
};

struct DifficultyChange {
  std::uint64_t seq = 0;  // terminal event that triggered the change
  DifficultyLevel from;
  DifficultyLevel to;

  bool operator==(const DifficultyChange&) const = default;
};

struct SessionMetrics {
  std::string session_id;
  std::string scenario_id;
  int scenario_version = 0;
  std::vector<SubtaskMetrics> per_subtask;
  std::size_t interaction_count = 0;
  double engagement_frequency = 0.0;  // interactions per second
  double total_duration_s = 0.0;
  DifficultyLevel final_difficulty;
  std::vector<DifficultyChange> difficulty_changes;
  bool aborted = false;

  bool operator==(const SessionMetrics&) const = default;
};

// ---- JSON ---------------------------------------------------------------
// Seeds travel as decimal strings so 64-bit values survive JSON consumers
// that only have doubles; readers accept either form.

inline json seed_to_json(std::uint64_t seed) { return std::to_string(seed); }

inline std::uint64_t seed_from_json(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer() && j.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(j.get<std::int64_t>());
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (!s.empty() && s.size() <= 20 && s.find_first_not_of("0123456789") == std::string::npos) {
      try {
        std::size_t used = 0;
        auto v = std::stoull(s, &used);
        if (used == s.size()) return v;
      } catch (const std::exception&) {
      }
    }
  }
  throw Error("bad-seed", "seed must be an unsigned 64-bit integer");
}

inline void to_json(json& j, const DifficultyLevel& d) { j = d.value(); }
inline void from_json(const json& j, DifficultyLevel& d) { d = DifficultyLevel(j.get<int>()); }

inline void to_json(json& j, EventKind k) { j = to_string(k); }
inline void from_json(const json& j, EventKind& k) {
  auto parsed = event_kind_from_string(j.get<std::string>());
  if (!parsed) throw Error("bad-event-kind", "unknown event kind '" + j.get<std::string>() + "'");
  k = *parsed;
}

inline void to_json(json& j, ModuleKind k) { j = to_string(k); }
inline void from_json(const json& j, ModuleKind& k) {
  auto parsed = module_kind_from_string(j.get<std::string>());
  if (!parsed) throw Error("bad-module-kind", "unknown module kind '" + j.get<std::string>() + "'");
  k = *parsed;
}

namespace detail {
template <class T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}
template <class T>
void get_opt(const json& j, const char* key, std::optional<T>& v) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) v = it->get<T>();
  else v.reset();
}
}  // namespace detail

inline void to_json(json& j, const EventPayload& p) {
  j = json::object();
  detail::put_opt(j, "step_id", p.step_id);
  detail::put_opt(j, "situation_id", p.situation_id);
  detail::put_opt(j, "choice_id", p.choice_id);
  if (!p.target_ids.empty()) j["target_ids"] = p.target_ids;
  if (p.seed) j["seed"] = seed_to_json(*p.seed);
  detail::put_opt(j, "scenario_id", p.scenario_id);
  detail::put_opt(j, "scenario_version", p.scenario_version);
  detail::put_opt(j, "reason", p.reason);
}

inline void from_json(const json& j, EventPayload& p) {
  if (!j.is_object()) throw Error("bad-payload", "event payload must be an object");
  detail::get_opt(j, "step_id", p.step_id);
  detail::get_opt(j, "situation_id", p.situation_id);
  detail::get_opt(j, "choice_id", p.choice_id);
  p.target_ids = j.value("target_ids", std::vector<std::string>{});
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) p.seed = seed_from_json(*it);
  else p.seed.reset();
  detail::get_opt(j, "scenario_id", p.scenario_id);
  detail::get_opt(j, "scenario_version", p.scenario_version);
  detail::get_opt(j, "reason", p.reason);
}

inline void to_json(json& j, const SessionEvent& e) {
  j = json{{"session_id", e.session_id},
           {"seq", e.seq},
           {"timestamp_s", e.timestamp_s},
           {"kind", e.kind},
           {"payload", e.payload}};
}

inline void from_json(const json& j, SessionEvent& e) {
  j.at("session_id").get_to(e.session_id);
  j.at("seq").get_to(e.seq);
  j.at("timestamp_s").get_to(e.timestamp_s);
  j.at("kind").get_to(e.kind);
  if (auto it = j.find("payload"); it != j.end()) it->get_to(e.payload);
  else e.payload = {};
}

inline void to_json(json& j, const StepResult& r) {
  j = json{{"item_ref", r.item_ref},
           {"module_kind", r.module_kind},
           {"module_index", r.module_index},
           {"completed", r.completed},
           {"correct", r.correct},
           {"duration_s", r.duration_s},
           {"time_limit_s", r.time_limit_s},
           {"weight", r.weight},
           {"difficulty_at_step", r.difficulty_at_step}};
  detail::put_opt(j, "chosen_id", r.chosen_id);
  detail::put_opt(j, "position_matched", r.position_matched);
}

inline void from_json(const json& j, StepResult& r) {
  j.at("item_ref").get_to(r.item_ref);
  j.at("module_kind").get_to(r.module_kind);
  j.at("module_index").get_to(r.module_index);
  j.at("completed").get_to(r.completed);
  j.at("correct").get_to(r.correct);
  j.at("duration_s").get_to(r.duration_s);
  j.at("time_limit_s").get_to(r.time_limit_s);
  j.at("weight").get_to(r.weight);
  j.at("difficulty_at_step").get_to(r.difficulty_at_step);
  detail::get_opt(j, "chosen_id", r.chosen_id);
  detail::get_opt(j, "position_matched", r.position_matched);
}

inline void to_json(json& j, const SubtaskMetrics& m) {
  j = json{{"label", m.label},
           {"module_kind", m.module_kind},
           {"steps", m.steps},
           {"completed", m.completed},
           {"successes", m.successes},
           {"completion_rate", m.completion_rate},
           {"avg_task_time_s", m.avg_task_time_s},
           {"success_rate", m.success_rate},
           {"weighted_score", m.weighted_score}};
  detail::put_opt(j, "matches", m.matches);
  detail::put_opt(j, "order_accuracy_X", m.order_accuracy_X);
  detail::put_opt(j, "action_correctness_Y", m.action_correctness_Y);
  detail::put_opt(j, "vrtss", m.vrtss);
}

inline void from_json(const json& j, SubtaskMetrics& m) {
  j.at("label").get_to(m.label);
  j.at("module_kind").get_to(m.module_kind);
  j.at("steps").get_to(m.steps);
  j.at("completed").get_to(m.completed);
  j.at("successes").get_to(m.successes);
  j.at("completion_rate").get_to(m.completion_rate);
  j.at("avg_task_time_s").get_to(m.avg_task_time_s);
  j.at("success_rate").get_to(m.success_rate);
  j.at("weighted_score").get_to(m.weighted_score);
  detail::get_opt(j, "matches", m.matches);
  detail::get_opt(j, "order_accuracy_X", m.order_accuracy_X);
  detail::get_opt(j, "action_correctness_Y", m.action_correctness_Y);
  detail::get_opt(j, "vrtss", m.vrtss);
}

inline void to_json(json& j, const DifficultyChange& c) {
  j = json{{"seq", c.seq}, {"from", c.from}, {"to", c.to}};
}
inline void from_json(const json& j, DifficultyChange& c) {
  j.at("seq").get_to(c.seq);
  j.at("from").get_to(c.from);
  j.at("to").get_to(c.to);
}

inline void to_json(json& j, const SessionMetrics& m) {
  j = json{{"session_id", m.session_id},
           {"scenario_id", m.scenario_id},
           {"scenario_version", m.scenario_version},
           {"per_subtask", m.per_subtask},
           {"interaction_count", m.interaction_count},
           {"engagement_frequency", m.engagement_frequency},
           {"engagement_per_minute", m.engagement_frequency * 60.0},
           {"total_duration_s", m.total_duration_s},
           {"final_difficulty", m.final_difficulty},
           {"difficulty_changes", m.difficulty_changes},
           {"aborted", m.aborted}};
}

inline void from_json(const json& j, SessionMetrics& m) {
  j.at("session_id").get_to(m.session_id);
  j.at("scenario_id").get_to(m.scenario_id);
  j.at("scenario_version").get_to(m.scenario_version);
  j.at("per_subtask").get_to(m.per_subtask);
  j.at("interaction_count").get_to(m.interaction_count);
  j.at("engagement_frequency").get_to(m.engagement_frequency);
  j.at("total_duration_s").get_to(m.total_duration_s);
  j.at("final_difficulty").get_to(m.final_difficulty);
  j.at("difficulty_changes").get_to(m.difficulty_changes);
  m.aborted = j.value("aborted", false);
}

// Canonical text form: sorted keys, shortest round-trip doubles, no padding.
inline std::string canonical(const SessionMetrics& m) { return json(m).dump(); }

}  // namespace trainforge
