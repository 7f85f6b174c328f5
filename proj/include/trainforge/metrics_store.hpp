#pragma once

// File-backed session store.
//
//   <root>/<scenario-id>/scenario-v<N>.scn        canonical scenario source
//   <root>/<scenario-id>/<session-id>/events.jsonl one SessionEvent per line
//   <root>/<scenario-id>/<session-id>/metrics.json finalized SessionMetrics
//
// Appends are idempotent on (session_id, seq). A reader never sees a torn
// record: loading stops at the last complete line or reports the byte
// offset of the damaged record.

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trainforge/core.hpp"
#include "trainforge/error.hpp"
#include "trainforge/scenario.hpp"
#include "trainforge/scenario_parser.hpp"

namespace trainforge {

struct TraceBundle {
  std::string scenario_id;
  int scenario_version = 0;
  std::string session_id;
  std::uint64_t seed = 0;
  std::vector<SessionEvent> events;
  std::optional<SessionMetrics> metrics;

  bool operator==(const TraceBundle&) const = default;
};

inline void to_json(json& j, const TraceBundle& b) {
  j = json{{"scenario_id", b.scenario_id},
           {"scenario_version", b.scenario_version},
           {"session_id", b.session_id},
           {"seed", seed_to_json(b.seed)},
           {"events", b.events}};
  if (b.metrics) j["metrics"] = *b.metrics;
}

// Parses a JSON Lines event log. Complete records end in '\n'; a final
// record without one, or a line that does not decode, is reported as
// corruption at the record's starting byte offset. Out-of-order seqs are
// reported as a sequence gap.
inline std::vector<SessionEvent> parse_event_log(std::string_view text) {
  std::vector<SessionEvent> events;
  std::size_t offset = 0;
  while (offset < text.size()) {
    const auto nl = text.find('\n', offset);
    if (nl == std::string_view::npos)
      throw Error("corrupt-trace", "torn record at byte offset " + std::to_string(offset)).at_offset(offset);
    const auto line = text.substr(offset, nl - offset);
    SessionEvent e;
    try {
      e = json::parse(line).get<SessionEvent>();
    } catch (const std::exception& ex) {
      throw Error("corrupt-trace", "undecodable record at byte offset " + std::to_string(offset) + ": " + ex.what())
          .at_offset(offset);
    }
    if (e.seq != events.size())
      throw Error("sequence-gap", "record at byte offset " + std::to_string(offset) + " has seq " +
                                       std::to_string(e.seq) + ", expected " + std::to_string(events.size()))
          .at_seq(e.seq)
          .at_offset(offset);
    events.push_back(std::move(e));
    offset = nl + 1;
  }
  return events;
}

inline std::string event_line(const SessionEvent& e) { return json(e).dump() + "\n"; }

class MetricsStore {
public:
  enum class AppendStatus { Appended, Duplicate };

  struct StoredScenario {
    std::string id;
    int version = 0;
    bool created = false;
  };

  explicit MetricsStore(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw Error("io-error", "cannot create store directory '" + root_.string() + "': " + ec.message());
    index();
  }

  const std::filesystem::path& root() const { return root_; }

  // ---- scenarios ----

  StoredScenario put_scenario(const Scenario& s) {
    check_name(s.id(), "scenario id");
    std::lock_guard lock(mu_);
    const auto dir = root_ / s.id();
    std::filesystem::create_directories(dir);
    const auto file = dir / ("scenario-v" + std::to_string(s.version()) + ".scn");
    const auto text = print_scenario(s);
    if (std::filesystem::exists(file)) {
      if (read_file(file.string()) != text)
        throw Error("scenario-conflict", "scenario '" + s.id() + "' version " + std::to_string(s.version()) +
                                             " already exists with different content");
      return {s.id(), s.version(), false};
    }
    write_atomic(file, text);
    return {s.id(), s.version(), true};
  }

  // Latest version when `version` is not given.
  std::optional<Scenario> get_scenario(const std::string& id, std::optional<int> version = std::nullopt) const {
    if (!valid_name(id)) return std::nullopt;
    const auto dir = root_ / id;
    std::error_code ec;
    if (!std::filesystem::is_directory(dir, ec)) return std::nullopt;
    std::optional<int> pick = version;
    if (!pick) {
      for (int v : scenario_versions(id)) pick = std::max(pick.value_or(v), v);
      if (!pick) return std::nullopt;
    }
    const auto file = dir / ("scenario-v" + std::to_string(*pick) + ".scn");
    if (!std::filesystem::exists(file)) return std::nullopt;
    return load_scenario(file.string());
  }

  std::vector<int> scenario_versions(const std::string& id) const {
    std::vector<int> out;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(root_ / id, ec)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("scenario-v", 0) == 0 && entry.path().extension() == ".scn") {
        try {
          out.push_back(std::stoi(name.substr(10)));
        } catch (const std::exception&) {
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<std::string> scenario_ids() const {
    std::set<std::string> ids;
    std::error_code ec;
    for (const auto& entry : std::filesystem::directory_iterator(root_, ec))
      if (entry.is_directory()) ids.insert(entry.path().filename().string());
    return {ids.begin(), ids.end()};
  }

  // ---- events ----

  // The first event of a session must be SessionStarted naming the scenario;
  // it determines where the session lives.
  AppendStatus append_event(const std::string& session_id, const SessionEvent& e) {
    if (e.session_id != session_id)
      throw Error("session-mismatch", "event belongs to session '" + e.session_id + "'").at_seq(e.seq);
    auto slot = session_slot(session_id, &e);
    std::lock_guard lock(slot->mu);
    if (!slot->loaded) {
      slot->events = read_events(slot->dir);
      slot->loaded = true;
    }
    if (e.seq < slot->events.size()) {
      if (slot->events[e.seq] == e) return AppendStatus::Duplicate;
      throw Error("seq-conflict", "a different event is already stored at seq " + std::to_string(e.seq)).at_seq(e.seq);
    }
    if (e.seq != slot->events.size())
      throw Error("sequence-gap", "expected seq " + std::to_string(slot->events.size()) + ", got " + std::to_string(e.seq))
          .at_seq(e.seq);
    std::filesystem::create_directories(slot->dir);
    {
      std::ofstream out(slot->dir / "events.jsonl", std::ios::binary | std::ios::app);
      out << event_line(e);
      out.flush();
      if (!out) throw Error("io-error", "failed to append to " + (slot->dir / "events.jsonl").string());
    }
    slot->events.push_back(e);
    return AppendStatus::Appended;
  }

  void write_metrics(const std::string& session_id, const SessionMetrics& m) {
    auto slot = session_slot(session_id, nullptr);
    std::lock_guard lock(slot->mu);
    write_atomic(slot->dir / "metrics.json", canonical(m) + "\n");
  }

  TraceBundle load_trace(const std::string& session_id) const {
    auto slot = find_slot(session_id);
    if (!slot) throw Error("not-found", "unknown session '" + session_id + "'");
    std::lock_guard lock(slot->mu);
    TraceBundle b;
    b.session_id = session_id;
    b.scenario_id = slot->scenario_id;
    b.events = read_events(slot->dir);
    if (!b.events.empty()) {
      const auto& p = b.events.front().payload;
      b.seed = p.seed.value_or(0);
      b.scenario_version = p.scenario_version.value_or(0);
    }
    const auto mfile = slot->dir / "metrics.json";
    if (std::filesystem::exists(mfile)) {
      try {
        b.metrics = json::parse(read_file(mfile.string())).get<SessionMetrics>();
      } catch (const std::exception& ex) {
        throw Error("corrupt-metrics", "cannot decode " + mfile.string() + ": " + ex.what());
      }
    }
    return b;
  }

  bool has_session(const std::string& session_id) const { return find_slot(session_id) != nullptr; }

  // Sessions in stable (scenario id, session id) order.
  std::vector<std::string> sessions(const std::optional<std::string>& scenario_id = std::nullopt) const {
    std::lock_guard lock(mu_);
    std::vector<std::pair<std::string, std::string>> rows;
    for (const auto& [id, slot] : slots_)
      if (!scenario_id || slot->scenario_id == *scenario_id) rows.emplace_back(slot->scenario_id, id);
    std::sort(rows.begin(), rows.end());
    std::vector<std::string> out;
    for (auto& r : rows) out.push_back(std::move(r.second));
    return out;
  }

  std::filesystem::path session_dir(const std::string& session_id) const {
    auto slot = find_slot(session_id);
    if (!slot) throw Error("not-found", "unknown session '" + session_id + "'");
    return slot->dir;
  }

private:
  struct Slot {
    std::string scenario_id;
    std::filesystem::path dir;
    std::vector<SessionEvent> events;
    bool loaded = false;
    mutable std::mutex mu;
  };

  static bool valid_name(const std::string& s) {
    if (s.empty() || s == "." || s == ".." || s.size() > 200) return false;
    return s.find_first_of("/\\\0", 0, 3) == std::string::npos;
  }
  static void check_name(const std::string& s, const char* what) {
    if (!valid_name(s)) throw Error("invalid-name", std::string(what) + " '" + s + "' cannot be used as a directory name");
  }

  static std::vector<SessionEvent> read_events(const std::filesystem::path& dir) {
    const auto file = dir / "events.jsonl";
    if (!std::filesystem::exists(file)) return {};
    return parse_event_log(read_file(file.string()));
  }

  static void write_atomic(const std::filesystem::path& file, const std::string& text) {
    const auto tmp = file.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << text;
      out.flush();
      if (!out) throw Error("io-error", "failed to write " + tmp);
    }
    std::filesystem::rename(tmp, file);
  }

  void index() {
    std::error_code ec;
    for (const auto& sdir : std::filesystem::directory_iterator(root_, ec)) {
      if (!sdir.is_directory()) continue;
      for (const auto& sess : std::filesystem::directory_iterator(sdir.path(), ec)) {
        if (!sess.is_directory()) continue;
        auto slot = std::make_shared<Slot>();
        slot->scenario_id = sdir.path().filename().string();
        slot->dir = sess.path();
        slots_[sess.path().filename().string()] = std::move(slot);
      }
    }
  }

  std::shared_ptr<Slot> find_slot(const std::string& session_id) const {
    std::lock_guard lock(mu_);
    auto it = slots_.find(session_id);
    return it == slots_.end() ? nullptr : it->second;
  }

  std::shared_ptr<Slot> session_slot(const std::string& session_id, const SessionEvent* first) {
    std::lock_guard lock(mu_);
    if (auto it = slots_.find(session_id); it != slots_.end()) return it->second;
    if (!first || first->seq != 0 || first->kind != EventKind::SessionStarted || !first->payload.scenario_id)
      throw Error("not-found", "unknown session '" + session_id + "' (first event must be SessionStarted with scenario_id)");
    check_name(session_id, "session id");
    check_name(*first->payload.scenario_id, "scenario id");
    auto slot = std::make_shared<Slot>();
    slot->scenario_id = *first->payload.scenario_id;
    slot->dir = root_ / slot->scenario_id / session_id;
    slot->loaded = true;
    slots_[session_id] = slot;
    return slot;
  }

  std::filesystem::path root_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
};

}  // namespace trainforge
