#pragma once

// Scenario content model: MCQ sets, interactive-question sets and live
// scenarios, plus the structural validator every Scenario passes through.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "trainforge/error.hpp"

namespace trainforge {

enum class ModuleKind { Mcq, Iq, Live };

inline const char* to_string(ModuleKind k) {
  switch (k) {
    case ModuleKind::Mcq: return "Mcq";
    case ModuleKind::Iq: return "Iq";
    case ModuleKind::Live: return "Live";
  }
  return "?";
}

inline std::optional<ModuleKind> module_kind_from_string(std::string_view s) {
  if (s == "Mcq") return ModuleKind::Mcq;
  if (s == "Iq") return ModuleKind::Iq;
  if (s == "Live") return ModuleKind::Live;
  return std::nullopt;
}

// Default column label used in reports when a module carries no label.
inline const char* default_label(ModuleKind k) {
  switch (k) {
    case ModuleKind::Mcq: return "MCQ";
    case ModuleKind::Iq: return "Interactive";
    case ModuleKind::Live: return "LiveScenario";
  }
  return "?";
}

struct AnswerOption {
  std::string id;
  std::string text;
  bool correct = false;
  int distractor_rank = 0;  // 0 = always shown

  bool operator==(const AnswerOption&) const = default;
};

struct McqItem {
  std::string id;
  std::string prompt;
  std::vector<std::string> asset_refs;
  std::vector<AnswerOption> options;
  double weight = 1.0;
  double time_limit_s = 30.0;
  std::optional<std::string> hint;

  bool operator==(const McqItem&) const = default;
};

struct InteractionTarget {
  std::string id;
  std::string label;
  std::string asset_ref;

  bool operator==(const InteractionTarget&) const = default;
};

struct IqItem {
  std::string id;
  std::string prompt;
  std::vector<InteractionTarget> targets;
  std::vector<std::string> correct_target_ids;  // treated as a set
  double weight = 1.0;
  double time_limit_s = 120.0;
  std::optional<std::string> hint;

  bool operator==(const IqItem&) const = default;
};

struct ActionOption {
  std::string id;
  std::string label;
  int distractor_rank = 0;

  bool operator==(const ActionOption&) const = default;
};

// One step of a live scenario. Its list position inside the owning
// LiveScenarioSpec is the ground-truth execution order.
struct Situation {
  std::string id;
  std::string prompt;
  std::vector<ActionOption> action_options;
  std::string correct_action_id;
  double weight = 1.0;
  double base_time_limit_s = 60.0;
  std::optional<std::string> hint;

  bool operator==(const Situation&) const = default;
};

struct McqSet {
  std::vector<McqItem> items;
  bool operator==(const McqSet&) const = default;
};

struct IqSet {
  std::vector<IqItem> items;
  bool operator==(const IqSet&) const = default;
};

struct LiveScenarioSpec {
  std::vector<Situation> situations;
  bool operator==(const LiveScenarioSpec&) const = default;
};

struct ModuleSpec {
  std::string label;  // empty = default_label(kind)
  std::variant<McqSet, IqSet, LiveScenarioSpec> body;

  ModuleKind kind() const { return static_cast<ModuleKind>(body.index()); }
  std::string display_label() const { return label.empty() ? default_label(kind()) : label; }

  // Number of engine steps the module produces.
  std::size_t step_count() const {
    return std::visit(
        [](const auto& m) -> std::size_t {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, LiveScenarioSpec>)
            return m.situations.size();
          else
            return m.items.size();
        },
        body);
  }

  bool operator==(const ModuleSpec&) const = default;
};

// Per-task score S_i fed into the weighted score: the correctness bit, or
// the completion bit.
enum class ScoreBasis { Correctness, Completion };

struct ScenarioData {
  std::string id;
  std::string title;
  int version = 1;
  ScoreBasis score_basis = ScoreBasis::Correctness;
  std::vector<ModuleSpec> modules;

  bool operator==(const ScenarioData&) const = default;
};

enum class Severity { Error, Warning };

struct ParseDiagnostic {
  Severity severity = Severity::Error;
  int line = 0;    // 1-based; 0 when the diagnostic has no source position
  int column = 0;  // 1-based
  std::string path;  // field path, e.g. modules[0].items[2].options[1].correct
  std::string code;
  std::string message;

  bool is_error() const { return severity == Severity::Error; }
  std::string to_string() const {
    std::string out;
    if (line > 0) out += std::to_string(line) + ":" + std::to_string(column) + ": ";
    out += severity == Severity::Error ? "error" : "warning";
    out += " [" + code + "] ";
    if (!path.empty()) out += path + ": ";
    out += message;
    return out;
  }
};

inline bool has_errors(const std::vector<ParseDiagnostic>& ds) {
  return std::any_of(ds.begin(), ds.end(), [](const auto& d) { return d.is_error(); });
}

namespace detail {

inline std::string idx(const std::string& base, const char* field, std::size_t i) {
  return base + "." + field + "[" + std::to_string(i) + "]";
}

class ScenarioChecker {
public:
  std::vector<ParseDiagnostic> run(const ScenarioData& s) {
    if (s.id.empty()) error("id", "empty-id", "scenario id must be non-empty");
    if (s.modules.empty()) error("modules", "no-modules", "scenario needs at least one module");
    for (std::size_t m = 0; m < s.modules.size(); ++m) {
      const std::string base = "modules[" + std::to_string(m) + "]";
      std::visit([&](const auto& body) { check(base, body); }, s.modules[m].body);
    }
    return std::move(out_);
  }

private:
  void error(std::string path, std::string code, std::string msg) {
    out_.push_back({Severity::Error, 0, 0, std::move(path), std::move(code), std::move(msg)});
  }

  void check_id(const std::string& path, const std::string& id) {
    if (id.empty()) {
      error(path + ".id", "empty-id", "id must be non-empty");
      return;
    }
    if (!seen_.insert(id).second)
      error(path + ".id", "duplicate-id", "id '" + id + "' is already used in this scenario");
  }

  void check_positive(const std::string& path, double v, const char* code) {
    if (!(v > 0.0)) error(path, code, "must be > 0, got " + std::to_string(v));
  }

  void check(const std::string& base, const McqSet& set) {
    if (set.items.empty()) error(base + ".items", "empty-module", "MCQ module has no items");
    for (std::size_t i = 0; i < set.items.size(); ++i) {
      const auto& item = set.items[i];
      const std::string p = idx(base, "items", i);
      check_id(p, item.id);
      check_positive(p + ".weight", item.weight, "weight-nonpositive");
      check_positive(p + ".time_limit_s", item.time_limit_s, "time-limit-nonpositive");
      if (item.options.size() < 2 || item.options.size() > 6)
        error(p + ".options", "option-count",
              "MCQ needs 2 to 6 options, got " + std::to_string(item.options.size()));
      std::set<std::string> ids;
      std::size_t correct = 0;
      for (std::size_t o = 0; o < item.options.size(); ++o) {
        const auto& opt = item.options[o];
        const std::string op = idx(p, "options", o);
        if (opt.id.empty()) error(op + ".id", "empty-id", "option id must be non-empty");
        else if (!ids.insert(opt.id).second)
          error(op + ".id", "duplicate-option-id", "option id '" + opt.id + "' repeated");
        if (opt.distractor_rank < 0)
          error(op + ".distractor_rank", "negative-rank", "distractor_rank must be >= 0");
        if (opt.correct) {
          if (++correct == 2)
            error(op + ".correct", "multiple-correct", "more than one option is flagged correct");
          if (opt.distractor_rank != 0)
            error(op + ".distractor_rank", "correct-ranked", "the correct option must have distractor_rank 0");
        }
      }
      if (correct == 0 && !item.options.empty())
        error(p + ".options", "no-correct", "no option is flagged correct");
    }
  }

  void check(const std::string& base, const IqSet& set) {
    if (set.items.empty()) error(base + ".items", "empty-module", "IQ module has no items");
    for (std::size_t i = 0; i < set.items.size(); ++i) {
      const auto& item = set.items[i];
      const std::string p = idx(base, "items", i);
      check_id(p, item.id);
      check_positive(p + ".weight", item.weight, "weight-nonpositive");
      check_positive(p + ".time_limit_s", item.time_limit_s, "time-limit-nonpositive");
      if (item.targets.size() < 2)
        error(p + ".targets", "target-count", "IQ needs at least 2 targets");
      std::set<std::string> ids;
      for (std::size_t t = 0; t < item.targets.size(); ++t) {
        const auto& tg = item.targets[t];
        if (tg.id.empty()) error(idx(p, "targets", t) + ".id", "empty-id", "target id must be non-empty");
        else if (!ids.insert(tg.id).second)
          error(idx(p, "targets", t) + ".id", "duplicate-target-id", "target id '" + tg.id + "' repeated");
      }
      if (item.correct_target_ids.empty())
        error(p + ".correct_target_ids", "no-correct-target", "correct_target_ids must be non-empty");
      std::set<std::string> correct;
      for (std::size_t c = 0; c < item.correct_target_ids.size(); ++c) {
        const auto& cid = item.correct_target_ids[c];
        if (!ids.count(cid))
          error(idx(p, "correct_target_ids", c), "dangling-target",
                "correct target '" + cid + "' is not among the item's targets");
        else if (!correct.insert(cid).second)
          error(idx(p, "correct_target_ids", c), "duplicate-target-id", "correct target '" + cid + "' repeated");
      }
    }
  }

  void check(const std::string& base, const LiveScenarioSpec& live) {
    if (live.situations.empty())
      error(base + ".situations", "empty-module", "live scenario has no situations");
    for (std::size_t i = 0; i < live.situations.size(); ++i) {
      const auto& s = live.situations[i];
      const std::string p = idx(base, "situations", i);
      check_id(p, s.id);
      check_positive(p + ".weight", s.weight, "weight-nonpositive");
      check_positive(p + ".base_time_limit_s", s.base_time_limit_s, "time-limit-nonpositive");
      if (s.action_options.size() < 2 || s.action_options.size() > 6)
        error(p + ".action_options", "action-count",
              "situation needs 2 to 6 action options, got " + std::to_string(s.action_options.size()));
      std::set<std::string> ids;
      bool found = false;
      for (std::size_t a = 0; a < s.action_options.size(); ++a) {
        const auto& act = s.action_options[a];
        const std::string ap = idx(p, "action_options", a);
        if (act.id.empty()) error(ap + ".id", "empty-id", "action id must be non-empty");
        else if (!ids.insert(act.id).second)
          error(ap + ".id", "duplicate-action-id", "action id '" + act.id + "' repeated");
        if (act.distractor_rank < 0)
          error(ap + ".distractor_rank", "negative-rank", "distractor_rank must be >= 0");
        if (act.id == s.correct_action_id) {
          found = true;
          if (act.distractor_rank != 0)
            error(ap + ".distractor_rank", "correct-ranked", "the correct action must have distractor_rank 0");
        }
      }
      if (!found)
        error(p + ".correct_action_id", "dangling-correct-action",
              "correct_action_id '" + s.correct_action_id + "' is not among the action options");
    }
  }

  std::set<std::string> seen_;
  std::vector<ParseDiagnostic> out_;
};

}  // namespace detail

// Cross-reference and invariant check. Empty result iff the data is a valid
// scenario. Diagnostics carry field paths; the parser attaches positions.
inline std::vector<ParseDiagnostic> validate_scenario(const ScenarioData& s) {
  return detail::ScenarioChecker{}.run(s);
}

class ScenarioError : public Error {
public:
  explicit ScenarioError(std::vector<ParseDiagnostic> ds)
      : Error("invalid-scenario", summary(ds)), diagnostics_(std::move(ds)) {}
  const std::vector<ParseDiagnostic>& diagnostics() const { return diagnostics_; }

private:
  static std::string summary(const std::vector<ParseDiagnostic>& ds) {
    std::string s = "invalid scenario";
    for (const auto& d : ds)
      if (d.is_error()) {
        s += ": " + d.to_string();
        break;
      }
    return s;
  }
  std::vector<ParseDiagnostic> diagnostics_;
};

// A scenario that has passed validate_scenario. The only way to obtain one is
// Scenario::create, so holders never need to re-check invariants.
class Scenario {
public:
  static Scenario create(ScenarioData data) {
    auto ds = validate_scenario(data);
    if (has_errors(ds)) throw ScenarioError(std::move(ds));
    return Scenario(std::move(data));
  }

  const std::string& id() const { return data_.id; }
  const std::string& title() const { return data_.title; }
  int version() const { return data_.version; }
  ScoreBasis score_basis() const { return data_.score_basis; }
  const std::vector<ModuleSpec>& modules() const { return data_.modules; }
  const ScenarioData& data() const { return data_; }

  bool operator==(const Scenario&) const = default;

private:
  explicit Scenario(ScenarioData d) : data_(std::move(d)) {}
  ScenarioData data_;
};

}  // namespace trainforge
