#pragma once

// Session engine: a clockless, deterministic state machine that walks a
// scenario step by step, consumes trainee events, adapts difficulty from a
// sliding performance window and finalizes per-module metrics.

#include <algorithm>
#include <array>
#include <cstdint>
#include <deque>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trainforge/core.hpp"
#include "trainforge/scenario.hpp"
#include "trainforge/scoring.hpp"

namespace trainforge {

enum class SessionMode { Live, Replay };

struct EngineConfig {
  std::size_t window = 3;        // K results that must agree before a level change
  double fast_fraction = 0.5;    // "fast" = duration < fast_fraction * time limit
  std::array<bool, 3> adaptive = {false, false, true};  // indexed by ModuleKind
  std::array<double, 3> time_multiplier = {1.0, 1.0, 0.75};  // indexed by level - 1
  std::size_t canonical_option_cap = 4;

  bool adapts(ModuleKind k) const { return adaptive[static_cast<std::size_t>(k)]; }
  double multiplier(DifficultyLevel d) const { return time_multiplier[static_cast<std::size_t>(d.value() - 1)]; }
};

struct PresentedOption {
  std::string id;
  std::string text;
  std::string asset_ref;

  bool operator==(const PresentedOption&) const = default;
};

struct SituationView {
  std::string situation_id;
  std::string prompt;
  std::vector<PresentedOption> actions;
  std::optional<std::string> hint;
  double time_limit_s = 0.0;

  bool operator==(const SituationView&) const = default;
};

struct Prompt {
  std::string step_id;
  ModuleKind module_kind = ModuleKind::Mcq;
  std::size_t module_index = 0;
  std::size_t step_index = 0;  // within the module
  std::string text;
  std::vector<PresentedOption> presented_options;  // MCQ options or IQ targets
  std::vector<SituationView> situations;            // live: situations not yet attempted
  std::optional<std::string> hint;
  double time_limit_s = 0.0;
  DifficultyLevel difficulty;

  bool operator==(const Prompt&) const = default;
};

struct StepOutcome {
  std::optional<StepResult> step_result;  // set for terminal events only
  std::optional<DifficultyChange> adaptation_applied;
  bool session_finished = false;
};

struct Cursor {
  std::size_t module = 0;
  std::size_t item = 0;

  bool operator==(const Cursor&) const = default;
};

// ---- adaptation -----------------------------------------------------------

struct PerformanceSample {
  bool correct = false;
  bool fast = false;
};

struct AdaptationState {
  DifficultyLevel level = DifficultyLevel::canonical();
  std::deque<PerformanceSample> window;  // most recent last, at most K entries

  void record(PerformanceSample s, std::size_t k) {
    window.push_back(s);
    while (window.size() > k) window.pop_front();
  }
};

// Hysteresis policy over a full window: K failures step down, K fast
// correct answers step up, anything else holds. The window is cleared on
// every change.
inline std::optional<std::pair<DifficultyLevel, DifficultyLevel>> adapt(AdaptationState& st, const EngineConfig& cfg) {
  if (cfg.window == 0 || st.window.size() < cfg.window) return std::nullopt;
  const bool all_failed = std::all_of(st.window.begin(), st.window.end(), [](auto s) { return !s.correct; });
  const bool all_fast = std::all_of(st.window.begin(), st.window.end(), [](auto s) { return s.correct && s.fast; });
  DifficultyLevel next = st.level;
  if (all_failed) next = st.level.easier();
  else if (all_fast) next = st.level.harder();
  if (next == st.level) return std::nullopt;
  auto change = std::make_pair(st.level, next);
  st.level = next;
  st.window.clear();
  return change;
}

// ---- deterministic helpers --------------------------------------------------

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

inline std::string random_uuid() {
  std::random_device rd;
  std::uint64_t hi = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::uint64_t lo = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  hi = (hi & 0xffffffffffff0fffULL) | 0x0000000000004000ULL;  // version 4
  lo = (lo & 0x3fffffffffffffffULL) | 0x8000000000000000ULL;  // RFC 4122 variant
  const std::string h = hex64(hi), l = hex64(lo);
  return h.substr(0, 8) + "-" + h.substr(8, 4) + "-" + h.substr(12, 4) + "-" + l.substr(0, 4) + "-" + l.substr(4);
}

// Fisher-Yates with a fixed draw rule, so orderings do not depend on the
// standard library's distribution implementation.
template <class T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

inline std::size_t presented_count(std::size_t total, std::size_t must_keep, DifficultyLevel d, const EngineConfig& cfg) {
  const std::size_t canonical = std::min(total, std::max<std::size_t>(cfg.canonical_option_cap, 2));
  std::size_t n = canonical;
  if (d == DifficultyLevel::assisted()) n = std::max<std::size_t>(2, canonical - 1);
  else if (d == DifficultyLevel::challenge()) n = total;
  n = std::max(n, must_keep + (total > must_keep ? 1 : 0));
  return std::min(n, total);
}

// Indices of the options to present: every correct option, then distractors
// with the lowest rank (ties by list order) until `count` is reached.
template <class Opt, class IsCorrect, class Rank>
std::vector<std::size_t> select_options(const std::vector<Opt>& opts, IsCorrect is_correct, Rank rank,
                                        DifficultyLevel d, const EngineConfig& cfg) {
  std::vector<std::size_t> keep, distractors;
  for (std::size_t i = 0; i < opts.size(); ++i) (is_correct(opts[i]) ? keep : distractors).push_back(i);
  std::stable_sort(distractors.begin(), distractors.end(),
                   [&](std::size_t a, std::size_t b) { return rank(opts[a]) < rank(opts[b]); });
  const std::size_t count = presented_count(opts.size(), keep.size(), d, cfg);
  for (std::size_t i = 0; keep.size() < count && i < distractors.size(); ++i) keep.push_back(distractors[i]);
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace detail

// ---- session -----------------------------------------------------------------

class Session {
public:
  Session(Scenario scenario, std::uint64_t seed, SessionMode mode, EngineConfig cfg = {},
          std::optional<std::string> session_id = std::nullopt)
      : scenario_(std::make_shared<const Scenario>(std::move(scenario))), cfg_(cfg), mode_(mode), seed_(seed) {
    if (session_id) id_ = *session_id;
    else id_ = mode == SessionMode::Live ? detail::random_uuid() : "replay-" + detail::hex64(detail::splitmix64(seed));
    live_logs_.resize(scenario_->modules().size());
  }

  const std::string& id() const { return id_; }
  SessionMode mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }
  const Scenario& scenario() const { return *scenario_; }
  const EngineConfig& config() const { return cfg_; }
  Cursor cursor() const { return cursor_; }
  DifficultyLevel difficulty() const { return adaptation_.level; }
  const AdaptationState& adaptation() const { return adaptation_; }
  const std::vector<StepResult>& step_results() const { return results_; }
  bool started() const { return started_; }
  bool ended() const { return ended_; }
  bool prompt_active() const { return active_.has_value(); }
  const std::optional<Prompt>& active_prompt() const { return active_; }
  std::optional<double> prompt_shown_at() const {
    return active_ ? std::optional<double>(prompt_ts_) : std::nullopt;
  }
  std::uint64_t next_seq() const { return next_seq_; }
  double last_timestamp() const { return last_ts_; }
  bool at_end() const { return cursor_.module >= scenario_->modules().size(); }

  // The prompt for the step under the cursor. Pure in (scenario, cursor,
  // difficulty, seed, step index, attempted live situations).
  Prompt next_prompt() const {
    if (ended_ || at_end()) throw Error("session-ended", "session has no further prompts");
    const auto& module = scenario_->modules()[cursor_.module];
    Prompt p;
    p.module_kind = module.kind();
    p.module_index = cursor_.module;
    p.step_index = cursor_.item;
    p.difficulty = adaptation_.level;
    std::mt19937_64 rng(detail::splitmix64(seed_ ^ detail::splitmix64(results_.size() + 1)));
    const bool assisted = adaptation_.level == DifficultyLevel::assisted();
    const double mult = cfg_.multiplier(adaptation_.level);

    std::visit(
        [&](const auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, McqSet>) {
            const auto& item = body.items[cursor_.item];
            p.step_id = item.id;
            p.text = item.prompt;
            auto idx = detail::select_options(
                item.options, [](const AnswerOption& o) { return o.correct; },
                [](const AnswerOption& o) { return o.distractor_rank; }, adaptation_.level, cfg_);
            detail::seeded_shuffle(idx, rng);
            for (auto i : idx) p.presented_options.push_back({item.options[i].id, item.options[i].text, ""});
            if (assisted) p.hint = item.hint;
            p.time_limit_s = item.time_limit_s * mult;
          } else if constexpr (std::is_same_v<T, IqSet>) {
            const auto& item = body.items[cursor_.item];
            p.step_id = item.id;
            p.text = item.prompt;
            const std::set<std::string> correct(item.correct_target_ids.begin(), item.correct_target_ids.end());
            auto idx = detail::select_options(
                item.targets, [&](const InteractionTarget& t) { return correct.count(t.id) > 0; },
                [](const InteractionTarget&) { return 0; }, adaptation_.level, cfg_);
            detail::seeded_shuffle(idx, rng);
            for (auto i : idx) p.presented_options.push_back({item.targets[i].id, item.targets[i].label, item.targets[i].asset_ref});
            if (assisted) p.hint = item.hint;
            p.time_limit_s = item.time_limit_s * mult;
          } else {
            p.step_id = live_step_id(cursor_.module, cursor_.item);
            p.text = module.display_label();
            const auto& attempted = live_logs_[cursor_.module].attempted;
            std::vector<std::size_t> remaining;
            for (std::size_t i = 0; i < body.situations.size(); ++i)
              if (!attempted.count(body.situations[i].id)) remaining.push_back(i);
            detail::seeded_shuffle(remaining, rng);
            for (auto si : remaining) {
              const auto& s = body.situations[si];
              SituationView v;
              v.situation_id = s.id;
              v.prompt = s.prompt;
              auto idx = detail::select_options(
                  s.action_options, [&](const ActionOption& a) { return a.id == s.correct_action_id; },
                  [](const ActionOption& a) { return a.distractor_rank; }, adaptation_.level, cfg_);
              detail::seeded_shuffle(idx, rng);
              for (auto i : idx) v.actions.push_back({s.action_options[i].id, s.action_options[i].label, ""});
              if (assisted) v.hint = s.hint;
              v.time_limit_s = s.base_time_limit_s * mult;
              p.time_limit_s = std::max(p.time_limit_s, v.time_limit_s);
              p.situations.push_back(std::move(v));
            }
          }
        },
        module.body);
    return p;
  }

  // Applies one event. Strong guarantee: on error the session is unchanged.
  StepOutcome submit(const SessionEvent& e) {
    Session next = *this;
    StepOutcome out = next.apply(e);
    *this = std::move(next);
    return out;
  }

  SessionMetrics finalize() const {
    if (!ended_) throw Error("session-active", "session has not ended");
    SessionMetrics m;
    m.session_id = id_;
    m.scenario_id = scenario_->id();
    m.scenario_version = scenario_->version();
    m.final_difficulty = adaptation_.level;
    m.difficulty_changes = changes_;
    m.aborted = aborted_;
    m.interaction_count = interactions_;
    m.total_duration_s = last_ts_ - start_ts_;
    m.engagement_frequency =
        m.total_duration_s > 0.0 ? scoring::engagement_frequency(interactions_, m.total_duration_s) : 0.0;

    const auto& modules = scenario_->modules();
    for (std::size_t mi = 0; mi < modules.size(); ++mi) {
      const auto& module = modules[mi];
      SubtaskMetrics sm;
      sm.label = module.display_label();
      sm.module_kind = module.kind();
      std::vector<double> durations;
      std::vector<scoring::ScoredTask> scored;
      for (const auto& r : results_) {
        if (r.module_index != mi) continue;
        ++sm.steps;
        sm.completed += static_cast<std::size_t>(r.completed);
        sm.successes += r.correct ? 1 : 0;
        if (r.completed) durations.push_back(r.duration_s);
        const bool basis = scenario_->score_basis() == ScoreBasis::Correctness ? r.correct : r.completed != 0;
        scored.push_back({basis ? 1.0 : 0.0, r.weight});
      }
      sm.completion_rate = static_cast<double>(sm.completed) / static_cast<double>(module.step_count());
      sm.success_rate = sm.steps ? scoring::success_rate(sm.successes, sm.steps) : 0.0;
      sm.avg_task_time_s = durations.empty() ? 0.0 : scoring::average_task_time(durations);
      sm.weighted_score = scoring::weighted_score(scored);
      if (const auto* live = std::get_if<LiveScenarioSpec>(&module.body)) {
        std::vector<std::string> expected;
        for (const auto& s : live->situations) expected.push_back(s.id);
        const auto order = scoring::order_accuracy(expected, live_logs_[mi].performed);
        const double y = scoring::action_correctness(live->situations, live_logs_[mi].actions);
        sm.matches = order.matches;
        sm.order_accuracy_X = order.x;
        sm.action_correctness_Y = y;
        sm.vrtss = scoring::vrtss(order.x, y);
      }
      m.per_subtask.push_back(std::move(sm));
    }
    return m;
  }

  static std::string live_step_id(std::size_t module, std::size_t step) {
    return "live-" + std::to_string(module) + "-" + std::to_string(step);
  }

private:
  struct LiveLog {
    std::vector<std::string> performed;  // situation id per step, "" for a timed-out slot
    std::map<std::string, std::string> actions;
    std::set<std::string> attempted;
  };

  [[noreturn]] void fail(const SessionEvent& e, const char* code, const std::string& msg) const {
    throw Error(code, "seq " + std::to_string(e.seq) + ": " + msg).at_seq(e.seq);
  }

  void require_step(const SessionEvent& e) const {
    if (!active_) fail(e, "protocol-violation", std::string(to_string(e.kind)) + " without an active prompt");
    if (e.payload.step_id && *e.payload.step_id != active_->step_id)
      fail(e, "protocol-violation", "event names step '" + *e.payload.step_id + "' but the active step is '" + active_->step_id + "'");
  }

  void require_kind(const SessionEvent& e, ModuleKind k) const {
    if (active_->module_kind != k)
      fail(e, "protocol-violation", std::string(to_string(e.kind)) + " is not valid in a " + to_string(active_->module_kind) + " step");
  }

  StepOutcome apply(const SessionEvent& e) {
    if (ended_) fail(e, "session-ended", "session already ended");
    if (e.seq != next_seq_)
      fail(e, "sequence-gap", "expected seq " + std::to_string(next_seq_) + ", got " + std::to_string(e.seq));
    if (!std::isfinite(e.timestamp_s) || e.timestamp_s < 0.0 || (next_seq_ > 0 && e.timestamp_s < last_ts_))
      fail(e, "time-regression", "timestamp " + std::to_string(e.timestamp_s) + " precedes " + std::to_string(last_ts_));

    if (!started_) {
      if (e.kind != EventKind::SessionStarted) fail(e, "protocol-violation", "first event must be SessionStarted");
      if (e.payload.seed && *e.payload.seed != seed_)
        fail(e, "seed-mismatch", "log was recorded with seed " + std::to_string(*e.payload.seed) +
                                     ", session uses " + std::to_string(seed_));
      if (e.payload.scenario_id && *e.payload.scenario_id != scenario_->id())
        fail(e, "scenario-mismatch", "log belongs to scenario '" + *e.payload.scenario_id + "'");
      if (e.payload.scenario_version && *e.payload.scenario_version != scenario_->version())
        fail(e, "scenario-mismatch", "log belongs to scenario version " + std::to_string(*e.payload.scenario_version));
      if (mode_ == SessionMode::Replay) id_ = e.session_id;
    }
    if (e.session_id != id_) fail(e, "session-mismatch", "event belongs to session '" + e.session_id + "'");

    StepOutcome out;
    switch (e.kind) {
      case EventKind::SessionStarted:
        if (started_) fail(e, "protocol-violation", "session already started");
        started_ = true;
        start_ts_ = e.timestamp_s;
        break;
      case EventKind::PromptShown: {
        if (active_) fail(e, "protocol-violation", "a prompt is already active");
        Prompt p = next_prompt();
        if (!e.payload.step_id || *e.payload.step_id != p.step_id)
          fail(e, "protocol-violation", "PromptShown must name step '" + p.step_id + "'");
        active_ = std::move(p);
        prompt_ts_ = e.timestamp_s;
        break;
      }
      case EventKind::HintShown:
        require_step(e);
        break;
      case EventKind::AnswerSelected: {
        require_step(e);
        require_kind(e, ModuleKind::Mcq);
        const auto& choice = e.payload.choice_id;
        if (!choice || !presented(*choice)) fail(e, "protocol-violation", "answer is not among the presented options");
        const auto& item = std::get<McqSet>(current_module().body).items[cursor_.item];
        const bool correct = std::any_of(item.options.begin(), item.options.end(),
                                         [&](const auto& o) { return o.correct && o.id == *choice; });
        out = record(e, item.id, 1, correct, choice, std::nullopt, item.weight);
        break;
      }
      case EventKind::TargetInteracted: {
        require_step(e);
        require_kind(e, ModuleKind::Iq);
        const auto& ids = e.payload.target_ids;
        std::set<std::string> chosen(ids.begin(), ids.end());
        if (ids.empty() || chosen.size() != ids.size())
          fail(e, "protocol-violation", "target_ids must be a non-empty set");
        for (const auto& t : ids)
          if (!presented(t)) fail(e, "protocol-violation", "target '" + t + "' is not presented");
        const auto& item = std::get<IqSet>(current_module().body).items[cursor_.item];
        const std::set<std::string> correct(item.correct_target_ids.begin(), item.correct_target_ids.end());
        std::string joined;
        for (const auto& t : chosen) joined += (joined.empty() ? "" : ",") + t;
        out = record(e, item.id, 1, chosen == correct, joined, std::nullopt, item.weight);
        break;
      }
      case EventKind::ActionPerformed: {
        require_step(e);
        require_kind(e, ModuleKind::Live);
        if (!e.payload.situation_id || !e.payload.choice_id)
          fail(e, "protocol-violation", "ActionPerformed needs situation_id and choice_id");
        const auto view = std::find_if(active_->situations.begin(), active_->situations.end(),
                                       [&](const auto& v) { return v.situation_id == *e.payload.situation_id; });
        if (view == active_->situations.end())
          fail(e, "protocol-violation", "situation '" + *e.payload.situation_id + "' is not available");
        if (std::none_of(view->actions.begin(), view->actions.end(),
                         [&](const auto& a) { return a.id == *e.payload.choice_id; }))
          fail(e, "protocol-violation", "action '" + *e.payload.choice_id + "' is not presented for this situation");
        const auto& live = std::get<LiveScenarioSpec>(current_module().body);
        const auto pos = static_cast<std::size_t>(
            std::find_if(live.situations.begin(), live.situations.end(),
                         [&](const auto& s) { return s.id == *e.payload.situation_id; }) -
            live.situations.begin());
        const auto& sit = live.situations[pos];
        const bool correct = sit.correct_action_id == *e.payload.choice_id;
        auto& log = live_logs_[cursor_.module];
        log.performed.push_back(sit.id);
        log.actions[sit.id] = *e.payload.choice_id;
        log.attempted.insert(sit.id);
        out = record(e, sit.id, 1, correct, e.payload.choice_id, pos == cursor_.item ? 1 : 0, sit.weight);
        break;
      }
      case EventKind::StepTimedOut: {
        require_step(e);
        std::string ref = active_->step_id;
        double weight = 1.0;
        std::optional<int> delta;
        const auto& module = current_module();
        if (const auto* mcq = std::get_if<McqSet>(&module.body)) weight = mcq->items[cursor_.item].weight;
        else if (const auto* iq = std::get_if<IqSet>(&module.body)) weight = iq->items[cursor_.item].weight;
        else {
          weight = std::get<LiveScenarioSpec>(module.body).situations[cursor_.item].weight;
          live_logs_[cursor_.module].performed.emplace_back();
          delta = 0;
        }
        out = record(e, ref, 0, false, std::nullopt, delta, weight);
        break;
      }
      case EventKind::SessionEnded:
        if (active_) {
          std::optional<int> delta;
          if (active_->module_kind == ModuleKind::Live) {
            live_logs_[cursor_.module].performed.emplace_back();
            delta = 0;
          }
          StepResult r = make_result(e, active_->step_id, 0, false, std::nullopt, delta, 1.0);
          results_.push_back(r);
          out.step_result = std::move(r);
          active_.reset();
        }
        aborted_ = !at_end();
        ended_ = true;
        out.session_finished = true;
        break;
    }
    if (is_interaction(e.kind)) ++interactions_;
    next_seq_ = e.seq + 1;
    last_ts_ = e.timestamp_s;
    return out;
  }

  const ModuleSpec& current_module() const { return scenario_->modules()[cursor_.module]; }

  bool presented(const std::string& id) const {
    return std::any_of(active_->presented_options.begin(), active_->presented_options.end(),
                       [&](const auto& o) { return o.id == id; });
  }

  StepResult make_result(const SessionEvent& e, std::string ref, int completed, bool correct,
                         std::optional<std::string> chosen, std::optional<int> delta, double weight) const {
    StepResult r;
    r.item_ref = std::move(ref);
    r.module_kind = active_->module_kind;
    r.module_index = cursor_.module;
    r.completed = completed;
    r.correct = completed ? correct : false;
    r.duration_s = e.timestamp_s - prompt_ts_;
    r.time_limit_s = active_->time_limit_s;
    r.weight = weight;
    r.chosen_id = std::move(chosen);
    r.position_matched = delta;
    r.difficulty_at_step = adaptation_.level;
    return r;
  }

  StepOutcome record(const SessionEvent& e, std::string ref, int completed, bool correct,
                     std::optional<std::string> chosen, std::optional<int> delta, double weight) {
    StepOutcome out;
    StepResult r = make_result(e, std::move(ref), completed, correct, std::move(chosen), delta, weight);
    if (cfg_.adapts(r.module_kind)) {
      adaptation_.record({r.correct, r.duration_s < cfg_.fast_fraction * r.time_limit_s}, cfg_.window);
      if (auto change = adapt(adaptation_, cfg_)) {
        DifficultyChange c{e.seq, change->first, change->second};
        changes_.push_back(c);
        out.adaptation_applied = c;
      }
    }
    results_.push_back(r);
    out.step_result = std::move(r);
    active_.reset();
    if (++cursor_.item >= current_module().step_count()) {
      ++cursor_.module;
      cursor_.item = 0;
    }
    if (at_end()) {
      ended_ = true;
      out.session_finished = true;
    }
    return out;
  }

  std::shared_ptr<const Scenario> scenario_;
  EngineConfig cfg_;
  SessionMode mode_;
  std::uint64_t seed_;
  std::string id_;
  Cursor cursor_;
  AdaptationState adaptation_;
  std::vector<StepResult> results_;
  std::vector<LiveLog> live_logs_;
  std::vector<DifficultyChange> changes_;
  std::optional<Prompt> active_;
  double prompt_ts_ = 0.0;
  double start_ts_ = 0.0;
  double last_ts_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::size_t interactions_ = 0;
  bool started_ = false;
  bool ended_ = false;
  bool aborted_ = false;
};

// ---- free-function surface ----------------------------------------------------

inline Session create_session(const Scenario& scenario, std::uint64_t seed, SessionMode mode, EngineConfig cfg = {}) {
  return Session(scenario, seed, mode, cfg);
}

inline Prompt next_prompt(const Session& s) { return s.next_prompt(); }

inline StepOutcome submit_event(Session& s, const SessionEvent& e) { return s.submit(e); }

inline SessionMetrics finalize(const Session& s) { return s.finalize(); }

// Re-drives a recorded log through a fresh session. Any protocol error is
// reported at the offending seq; a log that stops before the session ends
// is rejected as truncated.
inline SessionMetrics replay(const Scenario& scenario, const std::vector<SessionEvent>& log, std::uint64_t seed,
                             EngineConfig cfg = {}) {
  Session s(scenario, seed, SessionMode::Replay, cfg);
  for (const auto& e : log) s.submit(e);
  if (!s.ended())
    throw Error("truncated-log", "event log ends before the session does (next seq " + std::to_string(s.next_seq()) + ")")
        .at_seq(s.next_seq());
  return s.finalize();
}

}  // namespace trainforge
