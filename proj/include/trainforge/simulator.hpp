#pragma once

// Synthetic trainees. A profile drives a real Session step by step, so every
// emitted event has passed the engine's protocol checks.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "trainforge/core.hpp"
#include "trainforge/engine.hpp"
#include "trainforge/metrics_store.hpp"
#include "trainforge/report.hpp"

namespace trainforge {

struct LatencyModel {
  double mean_s = 10.0;
  double std_s = 3.0;

  bool operator==(const LatencyModel&) const = default;
};

struct TraineeProfile {
  std::string name = "trainee";
  double answer_accuracy = 1.0;
  double sequencing_fidelity = 1.0;
  std::array<LatencyModel, 3> latency{};  // indexed by ModuleKind
  double timeout_probability = 0.25;      // chance that a draw clipped at the limit becomes a timeout
  std::uint64_t seed = 0;

  bool operator==(const TraineeProfile&) const = default;
};

inline void validate_profile(const TraineeProfile& p) {
  auto prob = [&](double v, const char* what) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error("invalid-profile", "profile '" + p.name + "': " + what + " must be in [0,1]");
  };
  prob(p.answer_accuracy, "answer_accuracy");
  prob(p.sequencing_fidelity, "sequencing_fidelity");
  prob(p.timeout_probability, "timeout_probability");
  for (const auto& l : p.latency)
    if (!(l.mean_s > 0.0) || !(l.std_s >= 0.0))
      throw Error("invalid-profile", "profile '" + p.name + "': latency mean must be > 0 and std >= 0");
}

inline void to_json(json& j, const LatencyModel& l) { j = json{{"mean_s", l.mean_s}, {"std_s", l.std_s}}; }
inline void from_json(const json& j, LatencyModel& l) {
  j.at("mean_s").get_to(l.mean_s);
  l.std_s = j.value("std_s", 0.0);
}

inline void to_json(json& j, const TraineeProfile& p) {
  j = json{{"name", p.name},
           {"answer_accuracy", p.answer_accuracy},
           {"sequencing_fidelity", p.sequencing_fidelity},
           {"latency", {{"mcq", p.latency[0]}, {"iq", p.latency[1]}, {"live", p.latency[2]}}},
           {"timeout_probability", p.timeout_probability},
           {"seed", seed_to_json(p.seed)}};
}

inline void from_json(const json& j, TraineeProfile& p) {
  p = TraineeProfile{};
  p.name = j.value("name", p.name);
  j.at("answer_accuracy").get_to(p.answer_accuracy);
  j.at("sequencing_fidelity").get_to(p.sequencing_fidelity);
  if (auto it = j.find("latency"); it != j.end()) {
    const char* keys[] = {"mcq", "iq", "live"};
    for (std::size_t k = 0; k < 3; ++k)
      if (it->contains(keys[k])) (*it)[keys[k]].get_to(p.latency[k]);
  }
  p.timeout_probability = j.value("timeout_probability", p.timeout_probability);
  if (auto it = j.find("seed"); it != j.end()) p.seed = seed_from_json(*it);
  validate_profile(p);
}

// A profile file holds one profile object, a list of them, or
// {"profiles": [...]}.
inline std::vector<TraineeProfile> parse_profiles(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error("invalid-profile", std::string("profile file is not valid JSON: ") + e.what());
  }
  try {
    if (j.is_object() && j.contains("profiles")) j = j["profiles"];
    if (j.is_array()) return j.get<std::vector<TraineeProfile>>();
    return {j.get<TraineeProfile>()};
  } catch (const json::exception& e) {
    throw Error("invalid-profile", std::string("malformed profile: ") + e.what());
  }
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

// Ground-truth order with each adjacent pair swapped with probability
// (1 - fidelity), scanning left to right.
inline std::vector<std::size_t> perturbed_order(std::size_t n, double fidelity, std::mt19937_64& rng) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (u(rng) >= fidelity) std::swap(order[i], order[i + 1]);
  return order;
}

}  // namespace detail

class TraineeSimulator {
public:
  TraineeSimulator(const TraineeProfile& profile, const Scenario& scenario, std::uint64_t seed, EngineConfig cfg)
      : profile_(profile),
        scenario_(scenario),
        seed_(seed),
        rng_(detail::splitmix64(seed ^ detail::splitmix64(profile.seed ^ detail::fnv1a(profile.name)))),
        session_(scenario, seed, SessionMode::Live, cfg,
                 "sim-" + detail::hex64(detail::splitmix64(seed ^ detail::fnv1a(profile.name + "/" + scenario.id())))) {
    validate_profile(profile_);
  }

  TraceBundle run() {
    SessionEvent start = make(EventKind::SessionStarted);
    start.payload.seed = seed_;
    start.payload.scenario_id = scenario_.id();
    start.payload.scenario_version = scenario_.version();
    emit(std::move(start));

    while (!session_.ended()) {
      const Prompt p = session_.next_prompt();
      if (p.module_kind == ModuleKind::Live && p.step_index == 0) {
        const auto& live = std::get<LiveScenarioSpec>(scenario_.modules()[p.module_index].body);
        plan_ = detail::perturbed_order(live.situations.size(), profile_.sequencing_fidelity, rng_);
      }
      SessionEvent shown = make(EventKind::PromptShown);
      shown.payload.step_id = p.step_id;
      emit(std::move(shown));
      if (p.hint || std::any_of(p.situations.begin(), p.situations.end(), [](const auto& s) { return s.hint.has_value(); })) {
        SessionEvent hint = make(EventKind::HintShown);
        hint.payload.step_id = p.step_id;
        emit(std::move(hint));
      }
      respond(p);
    }

    TraceBundle b;
    b.scenario_id = scenario_.id();
    b.scenario_version = scenario_.version();
    b.session_id = session_.id();
    b.seed = seed_;
    b.events = std::move(events_);
    b.metrics = session_.finalize();
    return b;
  }

private:
  SessionEvent make(EventKind k) const {
    SessionEvent e;
    e.session_id = session_.id();
    e.seq = session_.next_seq();
    e.timestamp_s = clock_;
    e.kind = k;
    return e;
  }

  void emit(SessionEvent e) {
    session_.submit(e);  // a protocol error here is a simulator bug
    events_.push_back(std::move(e));
  }

  bool bernoulli(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng_)];
  }

  // Truncated normal on (0, limit]. Returns nullopt for a timeout.
  std::optional<double> latency(ModuleKind k, double limit) {
    const auto& model = profile_.latency[static_cast<std::size_t>(k)];
    std::normal_distribution<double> dist(model.mean_s, model.std_s);
    double d = model.std_s > 0.0 ? dist(rng_) : model.mean_s;
    for (int tries = 0; d <= 0.0 && tries < 16; ++tries) d = dist(rng_);
    if (d <= 0.0) d = std::min(model.mean_s, limit) * 0.5;
    if (d >= limit) {
      if (bernoulli(profile_.timeout_probability)) return std::nullopt;
      d = limit;
    }
    return d;
  }

  void respond(const Prompt& p) {
    const auto d = latency(p.module_kind, p.time_limit_s);
    if (!d) {
      clock_ += p.time_limit_s;
      SessionEvent e = make(EventKind::StepTimedOut);
      e.payload.step_id = p.step_id;
      emit(std::move(e));
      return;
    }
    clock_ += *d;
    const bool right = bernoulli(profile_.answer_accuracy);
    const auto& module = scenario_.modules()[p.module_index];

    if (p.module_kind == ModuleKind::Mcq) {
      const auto& item = std::get<McqSet>(module.body).items[p.step_index];
      std::vector<std::string> wrong;
      std::string correct;
      for (const auto& o : p.presented_options) {
        const bool is_correct = std::any_of(item.options.begin(), item.options.end(),
                                            [&](const auto& x) { return x.id == o.id && x.correct; });
        if (is_correct) correct = o.id;
        else wrong.push_back(o.id);
      }
      SessionEvent e = make(EventKind::AnswerSelected);
      e.payload.step_id = p.step_id;
      e.payload.choice_id = right || wrong.empty() ? correct : pick(wrong);
      emit(std::move(e));
    } else if (p.module_kind == ModuleKind::Iq) {
      const auto& item = std::get<IqSet>(module.body).items[p.step_index];
      std::vector<std::string> chosen = item.correct_target_ids;
      std::vector<std::string> distractors;
      for (const auto& o : p.presented_options)
        if (std::find(chosen.begin(), chosen.end(), o.id) == chosen.end()) distractors.push_back(o.id);
      if (!right && !distractors.empty()) chosen[std::uniform_int_distribution<std::size_t>(0, chosen.size() - 1)(rng_)] = pick(distractors);
      SessionEvent e = make(EventKind::TargetInteracted);
      e.payload.step_id = p.step_id;
      e.payload.target_ids = std::move(chosen);
      emit(std::move(e));
    } else {
      const auto& live = std::get<LiveScenarioSpec>(module.body);
      const auto& sit = live.situations[plan_[p.step_index]];
      const auto view = std::find_if(p.situations.begin(), p.situations.end(),
                                     [&](const auto& v) { return v.situation_id == sit.id; });
      std::vector<std::string> wrong;
      for (const auto& a : view->actions)
        if (a.id != sit.correct_action_id) wrong.push_back(a.id);
      SessionEvent e = make(EventKind::ActionPerformed);
      e.payload.step_id = p.step_id;
      e.payload.situation_id = sit.id;
      e.payload.choice_id = right || wrong.empty() ? sit.correct_action_id : pick(wrong);
      emit(std::move(e));
    }
  }

  const TraineeProfile& profile_;
  const Scenario& scenario_;
  std::uint64_t seed_;
  std::mt19937_64 rng_;
  Session session_;
  std::vector<SessionEvent> events_;
  std::vector<std::size_t> plan_;
  double clock_ = 0.0;
};

inline TraceBundle simulate(const TraineeProfile& profile, const Scenario& scenario, std::uint64_t seed,
                            EngineConfig cfg = {}) {
  return TraineeSimulator(profile, scenario, seed, cfg).run();
}

// Seed of the k-th session in a cohort run.
inline std::uint64_t cohort_session_seed(std::uint64_t base, std::size_t k) {
  return detail::splitmix64(base + 0x632be59bd9b4e019ULL * (k + 1));
}

inline void persist(MetricsStore& store, const Scenario& scenario, const TraceBundle& b) {
  store.put_scenario(scenario);
  for (const auto& e : b.events) store.append_event(b.session_id, e);
  if (b.metrics) store.write_metrics(b.session_id, *b.metrics);
}

// Simulates n sessions per profile, stores them and reports over exactly
// those sessions.
inline CohortReport run_cohort(const std::vector<TraineeProfile>& profiles, const Scenario& scenario,
                               std::size_t n_per_profile, std::uint64_t seed, MetricsStore& store,
                               EngineConfig cfg = {}, double mu0 = 0.5) {
  if (n_per_profile == 0) throw Error("invalid-count", "n_per_profile must be >= 1");
  if (profiles.empty()) throw Error("invalid-count", "at least one profile is required");
  std::set<std::string> ids;
  std::size_t k = 0;
  for (const auto& p : profiles) {
    for (std::size_t i = 0; i < n_per_profile; ++i, ++k) {
      auto b = simulate(p, scenario, cohort_session_seed(seed, k), cfg);
      persist(store, scenario, b);
      ids.insert(b.session_id);
    }
  }
  ReportFilter f;
  f.scenario_id = scenario.id();
  f.session_ids = std::move(ids);
  ReportOptions opts;
  opts.mu0 = mu0;
  opts.engine = cfg;
  return build_report(store, f, opts);
}

}  // namespace trainforge
