// trainforge: validate scenarios, replay traces, simulate cohorts, render
// reports and run the HTTP service.
//
// Exit codes: 0 success, 1 domain error, 2 usage or I/O error.
// Payloads go to stdout; diagnostics and progress go to stderr.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "trainforge/trainforge.hpp"

namespace fs = std::filesystem;
using namespace trainforge;

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

int report_error(const Error& e) {
  std::cerr << "error [" << e.code() << "]: " << e.what();
  if (e.seq) std::cerr << " (seq " << *e.seq << ")";
  if (e.byte_offset) std::cerr << " (byte offset " << *e.byte_offset << ")";
  std::cerr << "\n";
  return e.code() == "io-error" ? kUsageError : kDomainError;
}

bool read_source(const std::string& path, std::string& out) {
  try {
    out = read_file(path);
    return true;
  } catch (const Error& e) {
    std::cerr << "error [io-error]: " << e.what() << "\n";
    return false;
  }
}

// Parses a scenario file, printing diagnostics. Returns nullopt and sets
// `code` when the file is unreadable (2) or invalid (1).
std::optional<Scenario> scenario_from(const std::string& path, int& code) {
  std::string text;
  if (!read_source(path, text)) {
    code = kUsageError;
    return std::nullopt;
  }
  auto r = parse_scenario(text);
  for (const auto& d : r.diagnostics) std::cerr << path << ":" << d.to_string() << "\n";
  if (!r.ok()) {
    code = kDomainError;
    return std::nullopt;
  }
  return std::move(r.scenario);
}

std::string store_dir_or_env(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("TRAINFORGE_STORE")) return env;
  return {};
}

int cmd_validate(const std::string& file) {
  int code = kOk;
  auto s = scenario_from(file, code);
  if (!s) return code;
  json counts = json::array();
  for (const auto& m : s->modules()) counts.push_back({{"kind", m.kind()}, {"label", m.display_label()}, {"steps", m.step_count()}});
  std::cout << json{{"scenario_id", s->id()}, {"version", s->version()}, {"modules", counts}}.dump() << "\n";
  return kOk;
}

int cmd_replay(const std::string& scenario_file, const std::string& trace_path, std::optional<std::uint64_t> seed) {
  int code = kOk;
  auto s = scenario_from(scenario_file, code);
  if (!s) return code;
  fs::path trace = trace_path;
  if (fs::is_directory(trace)) trace /= "events.jsonl";
  std::string text;
  if (!read_source(trace.string(), text)) return kUsageError;
  try {
    auto events = parse_event_log(text);
    if (events.empty()) throw Error("truncated-log", "trace holds no events");
    const std::uint64_t use_seed = seed ? *seed : events.front().payload.seed.value_or(0);
    std::cout << canonical(replay(*s, events, use_seed)) << "\n";
    return kOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

int cmd_simulate(const std::vector<std::string>& profile_files, const std::string& scenario_file, std::size_t n,
                 std::uint64_t seed, const std::string& out_dir) {
  int code = kOk;
  auto s = scenario_from(scenario_file, code);
  if (!s) return code;
  std::vector<TraineeProfile> profiles;
  for (const auto& f : profile_files) {
    std::string text;
    if (!read_source(f, text)) return kUsageError;
    try {
      auto ps = parse_profiles(text);
      profiles.insert(profiles.end(), ps.begin(), ps.end());
    } catch (const Error& e) {
      return report_error(e);
    }
  }
  try {
    MetricsStore store(out_dir);
    std::size_t k = 0;
    for (const auto& p : profiles) {
      for (std::size_t i = 0; i < n; ++i, ++k) {
        const auto session_seed = cohort_session_seed(seed, k);
        auto b = simulate(p, *s, session_seed);
        persist(store, *s, b);
        json line{{"session_id", b.session_id}, {"profile", p.name}, {"seed", seed_to_json(session_seed)}};
        json vrtss = json::array();
        for (const auto& st : b.metrics->per_subtask)
          if (st.vrtss) vrtss.push_back(*st.vrtss);
        line["vrtss"] = vrtss;
        std::cout << line.dump() << "\n";
        std::cerr << "simulated " << b.session_id << " (" << p.name << ")\n";
      }
    }
    return kOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

int cmd_report(const std::string& store_flag, const std::optional<std::string>& scenario, std::optional<int> version,
               const std::string& format, double mu0) {
  const auto dir = store_dir_or_env(store_flag);
  if (dir.empty()) {
    std::cerr << "error [usage]: --store or TRAINFORGE_STORE is required\n";
    return kUsageError;
  }
  if (!fs::is_directory(dir)) {
    std::cerr << "error [io-error]: store directory '" << dir << "' does not exist\n";
    return kUsageError;
  }
  try {
    MetricsStore store(dir);
    ReportFilter f;
    f.scenario_id = scenario;
    f.scenario_version = version;
    ReportOptions opts;
    opts.mu0 = mu0;
    const auto r = build_report(store, f, opts);
    if (format == "machine") std::cout << json(r).dump(2) << "\n";
    else std::cout << render_text(r);
    return kOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

int cmd_serve(int port, const std::string& store_flag, const std::string& bind, const std::string& static_dir) {
  const auto dir = store_dir_or_env(store_flag);
  if (dir.empty()) {
    std::cerr << "error [usage]: --store or TRAINFORGE_STORE is required\n";
    return kUsageError;
  }
  try {
    MetricsStore store(dir);
    ServiceConfig cfg;
    cfg.static_dir = static_dir;
    TrainingService service(store, cfg);
    if (!service.bind(bind, port)) {
      std::cerr << "error [bind-failed]: cannot listen on " << bind << ":" << port << "\n";
      return kDomainError;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread watcher([&] {
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      service.stop();
    });
    std::thread([&] {
      service.wait_until_ready();
      std::cerr << "listening on " << bind << ":" << service.port() << "\n";
    }).detach();
    service.serve();
    g_interrupted = true;
    watcher.join();
    std::cerr << "shut down\n";
    return kOk;
  } catch (const Error& e) {
    return report_error(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trainforge: adaptive training-scenario engine"};
  app.require_subcommand(1);

  std::string file;
  auto* validate = app.add_subcommand("validate", "check a .scn scenario file");
  validate->add_option("file", file, "scenario file")->required();

  std::string scenario_file, trace;
  std::optional<std::uint64_t> replay_seed;
  auto* replay_cmd = app.add_subcommand("replay", "recompute session metrics from an event log");
  replay_cmd->add_option("scenario", scenario_file, "scenario file")->required();
  replay_cmd->add_option("trace", trace, "events.jsonl file or session directory")->required();
  replay_cmd->add_option("--seed", replay_seed, "session seed (default: the seed recorded in the log)");

  std::vector<std::string> profiles;
  std::size_t count = 0;
  std::uint64_t sim_seed = 0;
  std::string out_dir;
  auto* simulate_cmd = app.add_subcommand("simulate", "generate synthetic trainee sessions");
  simulate_cmd->add_option("--profile", profiles, "trainee profile file (repeatable)")->required();
  simulate_cmd->add_option("--scenario", scenario_file, "scenario file")->required();
  simulate_cmd->add_option("-n", count, "sessions per profile")->required()->check(CLI::PositiveNumber);
  simulate_cmd->add_option("--seed", sim_seed, "base seed")->required();
  simulate_cmd->add_option("--out", out_dir, "output store directory")->required();

  std::string store_dir, format = "text";
  std::optional<std::string> report_scenario;
  std::optional<int> report_version;
  double mu0 = 0.5;
  auto* report_cmd = app.add_subcommand("report", "cohort report over a store");
  report_cmd->add_option("--store", store_dir, "store directory (default: $TRAINFORGE_STORE)");
  report_cmd->add_option("--scenario", report_scenario, "scenario id");
  report_cmd->add_option("--version", report_version, "scenario version");
  report_cmd->add_option("--format", format, "text or machine")->check(CLI::IsMember({"text", "machine"}));
  report_cmd->add_option("--mu0", mu0, "null-hypothesis mean for the VRTSS t test");

  int port = 8080;
  std::string bind = "127.0.0.1", static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--port", port, "TCP port (0 = any free port)");
  serve_cmd->add_option("--store", store_dir, "store directory (default: $TRAINFORGE_STORE)");
  serve_cmd->add_option("--bind", bind, "bind address");
  serve_cmd->add_option("--static-dir", static_dir, "session-player assets to serve at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (*validate) return cmd_validate(file);
  if (*replay_cmd) return cmd_replay(scenario_file, trace, replay_seed);
  if (*simulate_cmd) return cmd_simulate(profiles, scenario_file, count, sim_seed, out_dir);
  if (*report_cmd) return cmd_report(store_dir, report_scenario, report_version, format, mu0);
  if (*serve_cmd) return cmd_serve(port, store_dir, bind, static_dir);
  return kUsageError;
}
