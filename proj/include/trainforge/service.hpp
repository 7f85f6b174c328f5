#pragma once

// HTTP façade over the engine and the store. Every request maps onto direct
// engine/store calls; per-session applies are serialized, and a rejected
// event leaves both the in-memory session and the event log untouched.
// Error codes and statuses are listed in docs/api.md.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include <httplib.h>

#include "trainforge/core.hpp"
#include "trainforge/engine.hpp"
#include "trainforge/metrics_store.hpp"
#include "trainforge/report.hpp"
#include "trainforge/scenario_parser.hpp"

namespace trainforge {

struct ApiError {
  int status = 500;
  std::string code;
  std::string message;
  std::optional<std::uint64_t> seq;
  std::optional<std::string> field;
  json details;  // extra structured data, e.g. parse diagnostics
};

inline int status_for(const std::string& code) {
  static const std::map<std::string, int> table = {
      {"bad-request", 400},        {"bad-seed", 400},           {"bad-event-kind", 400},
      {"bad-payload", 400},        {"bad-module-kind", 400},    {"not-found", 404},
      {"scenario-not-found", 404}, {"session-not-found", 404},  {"empty-cohort", 404},
      {"sequence-gap", 409},       {"seq-conflict", 409},       {"session-ended", 409},
      {"session-active", 409},     {"scenario-conflict", 409},  {"invalid-scenario", 422},
      {"protocol-violation", 422}, {"time-regression", 422},    {"session-mismatch", 422},
      {"seed-mismatch", 422},      {"scenario-mismatch", 422},  {"ambiguous-scenario", 422},
      {"invalid-name", 422},       {"io-error", 500},           {"corrupt-trace", 500},
      {"corrupt-metrics", 500},    {"internal", 500},
  };
  auto it = table.find(code);
  return it == table.end() ? 500 : it->second;
}

inline ApiError to_api_error(const Error& e) {
  ApiError a{status_for(e.code()), e.code(), e.what(), e.seq, e.field, nullptr};
  return a;
}

inline json to_json_body(const ApiError& a) {
  json err{{"code", a.code}, {"message", a.message}};
  if (a.seq) err["seq"] = *a.seq;
  if (a.field) err["field"] = *a.field;
  if (!a.details.is_null()) err["details"] = a.details;
  return json{{"error", err}};
}

inline void to_json(json& j, const ParseDiagnostic& d) {
  j = json{{"severity", d.severity == Severity::Error ? "error" : "warning"},
           {"line", d.line},
           {"column", d.column},
           {"path", d.path},
           {"code", d.code},
           {"message", d.message}};
}

inline void to_json(json& j, const PresentedOption& o) {
  j = json{{"id", o.id}, {"text", o.text}};
  if (!o.asset_ref.empty()) j["asset_ref"] = o.asset_ref;
}

inline void to_json(json& j, const SituationView& v) {
  j = json{{"situation_id", v.situation_id}, {"prompt", v.prompt}, {"actions", v.actions}, {"time_limit_s", v.time_limit_s}};
  if (v.hint) j["hint"] = *v.hint;
}

inline void to_json(json& j, const Prompt& p) {
  j = json{{"step_id", p.step_id},
           {"module_kind", p.module_kind},
           {"module_index", p.module_index},
           {"step_index", p.step_index},
           {"text", p.text},
           {"presented_options", p.presented_options},
           {"situations", p.situations},
           {"time_limit_s", p.time_limit_s},
           {"difficulty", p.difficulty}};
  if (p.hint) j["hint"] = *p.hint;
}

inline void to_json(json& j, const StepOutcome& o) {
  j = json{{"session_finished", o.session_finished}};
  if (o.step_result) j["step_result"] = *o.step_result;
  if (o.adaptation_applied) j["adaptation_applied"] = *o.adaptation_applied;
}

struct ServiceConfig {
  EngineConfig engine;
  bool enforce_deadlines = true;
  double deadline_grace_s = 0.0;
  std::chrono::milliseconds tick{20};
  std::string static_dir;  // optional session-player assets
};

class TrainingService {
public:
  TrainingService(MetricsStore& store, ServiceConfig cfg = {}) : store_(store), cfg_(std::move(cfg)) {
    // SO_REUSEADDR only: the library default adds SO_REUSEPORT, which lets a
    // second server silently share an occupied port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    routes();
  }

  ~TrainingService() { stop(); }

  TrainingService(const TrainingService&) = delete;
  TrainingService& operator=(const TrainingService&) = delete;

  // Binds and serves on the calling thread until stop(). Returns false if
  // the address cannot be bound.
  bool listen(const std::string& host, int port) {
    if (!bind(host, port)) return false;
    return serve();
  }

  bool bind(const std::string& host, int port) {
    if (port == 0) {
      port_ = server_.bind_to_any_port(host);
      return port_ > 0;
    }
    port_ = port;
    return server_.bind_to_port(host, port);
  }

  bool serve() {
    start_deadline_thread();
    const bool ok = server_.listen_after_bind();
    stop_deadline_thread();
    return ok;
  }

  // Safe from any thread; serve() returns once the listener has shut down.
  void stop() { server_.stop(); }

  void wait_until_ready() const { server_.wait_until_ready(); }
  int port() const { return port_; }

  // Applies one event exactly as POST /v1/sessions/{id}/events would.
  json submit(const std::string& session_id, SessionEvent e) {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mu);
    return apply_locked(*entry, std::move(e), Clock::now());
  }

private:
  using Clock = std::chrono::steady_clock;

  struct Entry {
    std::mutex mu;
    Session session;
    std::optional<Clock::time_point> deadline;
    std::optional<SessionMetrics> metrics;
    explicit Entry(Session s) : session(std::move(s)) {}
  };

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }
  static void reply_error(httplib::Response& res, const ApiError& a) { reply(res, a.status, to_json_body(a)); }

  template <class F>
  static void guarded(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const ScenarioError& e) {
      ApiError a = to_api_error(e);
      a.details = json{{"diagnostics", e.diagnostics()}};
      reply_error(res, a);
    } catch (const Error& e) {
      reply_error(res, to_api_error(e));
    } catch (const json::exception& e) {
      reply_error(res, {400, "bad-request", std::string("malformed JSON: ") + e.what(), {}, {}, nullptr});
    } catch (const std::exception& e) {
      reply_error(res, {500, "internal", e.what(), {}, {}, nullptr});
    }
  }

  std::shared_ptr<Entry> find(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error("session-not-found", "unknown session '" + id + "'");
    return it->second;
  }

  json state_json(const Entry& en) const {
    const Session& s = en.session;
    json j{{"session_id", s.id()},
           {"scenario_id", s.scenario().id()},
           {"scenario_version", s.scenario().version()},
           {"seed", seed_to_json(s.seed())},
           {"next_seq", s.next_seq()},
           {"started", s.started()},
           {"ended", s.ended()},
           {"difficulty", s.difficulty()},
           {"prompt_active", s.prompt_active()},
           {"last_timestamp_s", s.last_timestamp()},
           {"step_results", s.step_results()}};
    if (s.active_prompt()) j["prompt"] = *s.active_prompt();
    else if (!s.ended()) j["prompt"] = s.next_prompt();
    if (en.metrics) j["metrics"] = *en.metrics;
    return j;
  }

  // Engine transition on a copy, then durable append, then commit.
  json apply_locked(Entry& en, SessionEvent e, Clock::time_point now) {
    Session next = en.session;
    if (e.kind == EventKind::SessionStarted) {
      if (!e.payload.seed) e.payload.seed = next.seed();
      if (!e.payload.scenario_id) e.payload.scenario_id = next.scenario().id();
      if (!e.payload.scenario_version) e.payload.scenario_version = next.scenario().version();
    }
    StepOutcome out = next.submit(e);
    store_.append_event(e.session_id, e);
    std::optional<SessionMetrics> metrics;
    if (next.ended()) {
      metrics = next.finalize();
      store_.write_metrics(next.id(), *metrics);
    }
    en.session = std::move(next);
    en.metrics = metrics;
    if (en.session.prompt_active() && e.kind == EventKind::PromptShown)
      en.deadline = now + std::chrono::duration_cast<Clock::duration>(
                              std::chrono::duration<double>(en.session.active_prompt()->time_limit_s + cfg_.deadline_grace_s));
    else if (!en.session.prompt_active())
      en.deadline.reset();

    json body{{"outcome", out}, {"next_seq", en.session.next_seq()}, {"difficulty", en.session.difficulty()}};
    if (metrics) body["metrics"] = *metrics;
    else if (en.session.active_prompt()) body["prompt"] = *en.session.active_prompt();
    else body["prompt"] = en.session.next_prompt();
    return body;
  }

  void routes() {
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, json{{"status", "ok"}});
    });

    server_.Post("/v1/scenarios", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto parsed = parse_scenario(req.body);
        if (!parsed.ok()) throw ScenarioError(std::move(parsed.diagnostics));
        auto stored = store_.put_scenario(*parsed.scenario);
        json warnings = json::array();
        for (const auto& d : parsed.diagnostics) warnings.push_back(d);
        reply(res, stored.created ? 201 : 200,
              json{{"scenario_id", stored.id}, {"version", stored.version}, {"created", stored.created}, {"warnings", warnings}});
      });
    });

    server_.Get(R"(/v1/scenarios/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::optional<int> version;
        if (req.has_param("version")) version = std::stoi(req.get_param_value("version"));
        auto s = store_.get_scenario(req.matches[1], version);
        if (!s) throw Error("scenario-not-found", "unknown scenario '" + std::string(req.matches[1]) + "'");
        reply(res, 200, json{{"scenario_id", s->id()}, {"version", s->version()}, {"title", s->title()}, {"source", print_scenario(*s)}});
      });
    });

    server_.Post("/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = req.body.empty() ? json::object() : json::parse(req.body);
        if (!body.is_object() || !body.contains("scenario_id") || !body["scenario_id"].is_string())
          throw Error("bad-request", "body must be an object with a string scenario_id");
        std::optional<int> version;
        if (body.contains("version") && !body["version"].is_null()) version = body["version"].get<int>();
        auto scenario = store_.get_scenario(body["scenario_id"].get<std::string>(), version);
        if (!scenario) throw Error("scenario-not-found", "unknown scenario '" + body["scenario_id"].get<std::string>() + "'");
        std::uint64_t seed;
        if (body.contains("seed") && !body["seed"].is_null()) {
          seed = seed_from_json(body["seed"]);
        } else {
          std::random_device rd;
          seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        }
        auto entry = std::make_shared<Entry>(Session(*scenario, seed, SessionMode::Live, cfg_.engine));
        json out{{"session_id", entry->session.id()},
                 {"seed", seed_to_json(seed)},
                 {"scenario_id", scenario->id()},
                 {"scenario_version", scenario->version()},
                 {"next_seq", 0},
                 {"difficulty", entry->session.difficulty()},
                 {"prompt", entry->session.next_prompt()}};
        {
          std::lock_guard lock(mu_);
          sessions_[entry->session.id()] = entry;
        }
        reply(res, 201, out);
      });
    });

    server_.Get(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        auto entry = find(req.matches[1]);
        std::lock_guard lock(entry->mu);
        reply(res, 200, state_json(*entry));
      });
    });

    server_.Post(R"(/v1/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        json body = json::parse(req.body);
        if (!body.is_object()) throw Error("bad-request", "event must be a JSON object");
        if (!body.contains("session_id")) body["session_id"] = id;
        SessionEvent e;
        try {
          e = body.get<SessionEvent>();
        } catch (const json::exception& ex) {
          throw Error("bad-request", std::string("malformed event: ") + ex.what());
        }
        if (e.session_id != id) throw Error("session-mismatch", "event session_id does not match the URL");
        reply(res, 200, submit(id, std::move(e)));
      });
    });

    server_.Get(R"(/v1/sessions/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const std::string id = req.matches[1];
        std::shared_ptr<Entry> entry;
        {
          std::lock_guard lock(mu_);
          if (auto it = sessions_.find(id); it != sessions_.end()) entry = it->second;
        }
        if (entry) {
          std::lock_guard lock(entry->mu);
          if (!entry->session.ended()) throw Error("session-active", "session '" + id + "' has not ended");
          reply(res, 200, json(entry->session.finalize()));
          return;
        }
        if (!store_.has_session(id)) throw Error("session-not-found", "unknown session '" + id + "'");
        auto b = store_.load_trace(id);
        auto scenario = store_.get_scenario(b.scenario_id, b.scenario_version);
        if (!scenario) throw Error("scenario-not-found", "scenario of session '" + id + "' is not stored");
        Session s(*scenario, b.seed, SessionMode::Replay, cfg_.engine);
        for (const auto& e : b.events) s.submit(e);
        if (!s.ended()) throw Error("session-active", "session '" + id + "' has not ended");
        reply(res, 200, json(s.finalize()));
      });
    });

    server_.Get("/v1/reports", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        ReportFilter f;
        if (req.has_param("scenario_id")) f.scenario_id = req.get_param_value("scenario_id");
        if (req.has_param("version")) f.scenario_version = std::stoi(req.get_param_value("version"));
        ReportOptions opts;
        opts.engine = cfg_.engine;
        if (req.has_param("mu0")) opts.mu0 = std::stod(req.get_param_value("mu0"));
        auto report = build_report(store_, f, opts);
        if (req.has_param("format") && req.get_param_value("format") == "text") {
          res.status = 200;
          res.set_content(render_text(report), "text/plain");
        } else {
          reply(res, 200, json(report));
        }
      });
    });

    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
      reply_error(res, {500, "internal", "unhandled exception", {}, {}, nullptr});
    });

    if (!cfg_.static_dir.empty()) server_.set_mount_point("/", cfg_.static_dir);
  }

  // Server-side time limits: an expired prompt gets a synthesized
  // StepTimedOut stamped at prompt time + limit on the session's clock.
  void expire_deadlines() {
    std::vector<std::shared_ptr<Entry>> entries;
    {
      std::lock_guard lock(mu_);
      for (auto& [id, e] : sessions_) entries.push_back(e);
    }
    const auto now = Clock::now();
    for (auto& en : entries) {
      std::lock_guard lock(en->mu);
      if (!en->deadline || now < *en->deadline || !en->session.prompt_active()) continue;
      SessionEvent e;
      e.session_id = en->session.id();
      e.seq = en->session.next_seq();
      e.timestamp_s = std::max(en->session.last_timestamp(),
                               *en->session.prompt_shown_at() + en->session.active_prompt()->time_limit_s);
      e.kind = EventKind::StepTimedOut;
      e.payload.step_id = en->session.active_prompt()->step_id;
      try {
        apply_locked(*en, std::move(e), now);
      } catch (const Error&) {
        en->deadline.reset();
      }
    }
  }

  void start_deadline_thread() {
    if (!cfg_.enforce_deadlines || ticker_.joinable()) return;
    ticking_ = true;
    ticker_ = std::thread([this] {
      std::unique_lock lock(tick_mu_);
      while (ticking_) {
        tick_cv_.wait_for(lock, cfg_.tick, [this] { return !ticking_; });
        if (!ticking_) break;
        lock.unlock();
        expire_deadlines();
        lock.lock();
      }
    });
  }

  void stop_deadline_thread() {
    {
      std::lock_guard lock(tick_mu_);
      ticking_ = false;
    }
    tick_cv_.notify_all();
    if (ticker_.joinable()) ticker_.join();
  }

  MetricsStore& store_;
  ServiceConfig cfg_;
  httplib::Server server_;
  int port_ = 0;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::thread ticker_;
  std::mutex tick_mu_;
  std::condition_variable tick_cv_;
  bool ticking_ = false;
};

}  // namespace trainforge
