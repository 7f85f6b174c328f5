#pragma once

// Reader and canonical printer for `.scn` scenario files (a YAML document,
// schema in docs/scenario-format.md). Every diagnostic is anchored to a
// 1-based line/column of the source, plus the field path it concerns.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "trainforge/error.hpp"
#include "trainforge/scenario.hpp"

namespace trainforge {

struct ParseResult {
  std::optional<Scenario> scenario;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return scenario.has_value(); }
};

namespace detail {

inline constexpr std::size_t kMaxFlowDepth = 64;

// Returns the byte offset of the first invalid UTF-8 sequence, if any.
inline std::optional<std::size_t> first_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    const bool overlong = (len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000);
    if (overlong || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return i;
    i += len;
  }
  return std::nullopt;
}

inline std::pair<int, int> line_col_at(std::string_view s, std::size_t offset) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < s.size(); ++i) {
    if (s[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

// Nesting guard against pathological inputs; counts flow brackets and block
// sequence dashes per line, ignoring quoting (over-approximates, never under).
inline std::optional<std::size_t> excessive_nesting(std::string_view s) {
  std::size_t depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '[' || c == '{') {
      if (++depth > kMaxFlowDepth) return i;
    } else if ((c == ']' || c == '}') && depth > 0) {
      --depth;
    }
  }
  std::size_t dashes = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\n') dashes = 0;
    else if (s[i] == '-' && (i + 1 == s.size() || s[i + 1] == ' ')) {
      if (++dashes > kMaxFlowDepth) return i;
    }
  }
  return std::nullopt;
}

class ScnReader {
public:
  explicit ScnReader(std::vector<ParseDiagnostic>& out) : out_(out) {}

  ScenarioData read(const YAML::Node& root) {
    ScenarioData s;
    if (!root.IsMap()) {
      error(root, "", "type-error", "scenario document must be a mapping");
      return s;
    }
    marks_[""] = root.Mark();
    fields(root, "", {"id", "title", "version", "score_basis", "modules"});
    s.id = req_string(root, "", "id");
    s.title = opt_string(root, "", "title").value_or("");
    s.version = opt_int(root, "", "version").value_or(1);
    if (auto basis = opt_string(root, "", "score_basis")) {
      if (*basis == "correctness") s.score_basis = ScoreBasis::Correctness;
      else if (*basis == "completion") s.score_basis = ScoreBasis::Completion;
      else error(root["score_basis"], "score_basis", "bad-value", "score_basis must be 'correctness' or 'completion'");
    }
    auto modules = seq(root, "", "modules", true);
    for (std::size_t i = 0; i < modules.size(); ++i) {
      const std::string p = "modules[" + std::to_string(i) + "]";
      if (auto m = module(modules[i], p)) s.modules.push_back(std::move(*m));
    }
    return s;
  }

  // Closest recorded position for a field path (walks up to ancestors).
  YAML::Mark mark_for(std::string path) const {
    while (true) {
      if (auto it = marks_.find(path); it != marks_.end()) return it->second;
      if (path.empty()) return YAML::Mark();
      const auto cut = path.find_last_of(".[");
      path = cut == std::string::npos ? std::string() : path.substr(0, cut);
    }
  }

private:
  void diag(Severity sev, const YAML::Mark& m, std::string path, std::string code, std::string msg) {
    ParseDiagnostic d;
    d.severity = sev;
    d.line = m.is_null() ? 1 : m.line + 1;
    d.column = m.is_null() ? 1 : m.column + 1;
    d.path = std::move(path);
    d.code = std::move(code);
    d.message = std::move(msg);
    out_.push_back(std::move(d));
  }
  void error(const YAML::Node& n, std::string path, std::string code, std::string msg) {
    diag(Severity::Error, n.IsDefined() ? n.Mark() : mark_for(path), std::move(path), std::move(code), std::move(msg));
  }

  static std::string join(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
  }

  void fields(const YAML::Node& map, const std::string& base, std::initializer_list<const char*> known) {
    for (const auto& kv : map) {
      std::string key;
      try {
        key = kv.first.as<std::string>();
      } catch (const YAML::Exception&) {
        error(kv.first, base, "type-error", "mapping keys must be scalars");
        continue;
      }
      const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return key == k; });
      if (!ok) diag(Severity::Warning, kv.first.Mark(), join(base, key), "unknown-field", "unknown field '" + key + "' ignored");
      else marks_[join(base, key)] = kv.second.Mark();
    }
  }

  YAML::Node child(const YAML::Node& map, const std::string& base, const char* key, bool required) {
    YAML::Node n = map[key];
    if (!n.IsDefined() || n.IsNull()) {
      if (required) diag(Severity::Error, map.Mark(), join(base, key), "missing-field", std::string("required field '") + key + "' is missing");
      return YAML::Node(YAML::NodeType::Undefined);
    }
    return n;
  }

  std::optional<std::string> opt_string(const YAML::Node& map, const std::string& base, const char* key, bool required = false) {
    YAML::Node n = child(map, base, key, required);
    if (!n.IsDefined()) return std::nullopt;
    if (!n.IsScalar()) {
      error(n, join(base, key), "type-error", std::string("field '") + key + "' must be a string");
      return std::nullopt;
    }
    return n.Scalar();
  }
  std::string req_string(const YAML::Node& map, const std::string& base, const char* key) {
    return opt_string(map, base, key, true).value_or("");
  }

  std::optional<double> opt_number(const YAML::Node& map, const std::string& base, const char* key) {
    YAML::Node n = child(map, base, key, false);
    if (!n.IsDefined()) return std::nullopt;
    double v = 0.0;
    if (!n.IsScalar() || !YAML::convert<double>::decode(n, v) || !std::isfinite(v)) {
      error(n, join(base, key), "type-error", std::string("field '") + key + "' must be a finite number");
      return std::nullopt;
    }
    return v;
  }

  std::optional<int> opt_int(const YAML::Node& map, const std::string& base, const char* key) {
    YAML::Node n = child(map, base, key, false);
    if (!n.IsDefined()) return std::nullopt;
    int v = 0;
    if (!n.IsScalar() || !YAML::convert<int>::decode(n, v)) {
      error(n, join(base, key), "type-error", std::string("field '") + key + "' must be an integer");
      return std::nullopt;
    }
    return v;
  }

  std::optional<bool> opt_bool(const YAML::Node& map, const std::string& base, const char* key) {
    YAML::Node n = child(map, base, key, false);
    if (!n.IsDefined()) return std::nullopt;
    bool v = false;
    if (!n.IsScalar() || !YAML::convert<bool>::decode(n, v)) {
      error(n, join(base, key), "type-error", std::string("field '") + key + "' must be true or false");
      return std::nullopt;
    }
    return v;
  }

  std::vector<YAML::Node> seq(const YAML::Node& map, const std::string& base, const char* key, bool required) {
    std::vector<YAML::Node> out;
    YAML::Node n = child(map, base, key, required);
    if (!n.IsDefined()) return out;
    if (!n.IsSequence()) {
      error(n, join(base, key), "type-error", std::string("field '") + key + "' must be a list");
      return out;
    }
    std::size_t i = 0;
    for (const auto& e : n) {
      marks_[join(base, key) + "[" + std::to_string(i++) + "]"] = e.Mark();
      out.push_back(e);
    }
    return out;
  }

  std::vector<std::string> string_list(const YAML::Node& map, const std::string& base, const char* key, bool required) {
    std::vector<std::string> out;
    auto nodes = seq(map, base, key, required);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i].IsScalar()) error(nodes[i], join(base, key) + "[" + std::to_string(i) + "]", "type-error", "list entries must be strings");
      else out.push_back(nodes[i].Scalar());
    }
    return out;
  }

  bool expect_map(const YAML::Node& n, const std::string& path) {
    if (n.IsMap()) return true;
    error(n, path, "type-error", "expected a mapping");
    return false;
  }

  int rank(const YAML::Node& n, const std::string& p) {
    auto r = opt_int(n, p, "distractor_rank").value_or(0);
    return r;
  }

  std::optional<ModuleSpec> module(const YAML::Node& n, const std::string& p) {
    if (!expect_map(n, p)) return std::nullopt;
    auto kind = opt_string(n, p, "kind", true);
    if (!kind) return std::nullopt;
    ModuleSpec m;
    m.label = opt_string(n, p, "label").value_or("");
    if (*kind == "mcq") {
      fields(n, p, {"kind", "label", "items"});
      McqSet set;
      auto items = seq(n, p, "items", true);
      for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string ip = p + ".items[" + std::to_string(i) + "]";
        if (!expect_map(items[i], ip)) continue;
        fields(items[i], ip, {"id", "prompt", "asset_refs", "options", "weight", "time_limit_s", "hint"});
        McqItem item;
        item.id = req_string(items[i], ip, "id");
        item.prompt = req_string(items[i], ip, "prompt");
        item.asset_refs = string_list(items[i], ip, "asset_refs", false);
        item.weight = opt_number(items[i], ip, "weight").value_or(1.0);
        item.time_limit_s = opt_number(items[i], ip, "time_limit_s").value_or(30.0);
        item.hint = opt_string(items[i], ip, "hint");
        auto opts = seq(items[i], ip, "options", true);
        for (std::size_t o = 0; o < opts.size(); ++o) {
          const std::string op = ip + ".options[" + std::to_string(o) + "]";
          if (!expect_map(opts[o], op)) continue;
          fields(opts[o], op, {"id", "text", "correct", "distractor_rank"});
          AnswerOption opt;
          opt.id = req_string(opts[o], op, "id");
          opt.text = opt_string(opts[o], op, "text").value_or("");
          opt.correct = opt_bool(opts[o], op, "correct").value_or(false);
          opt.distractor_rank = rank(opts[o], op);
          item.options.push_back(std::move(opt));
        }
        set.items.push_back(std::move(item));
      }
      m.body = std::move(set);
    } else if (*kind == "iq") {
      fields(n, p, {"kind", "label", "items"});
      IqSet set;
      auto items = seq(n, p, "items", true);
      for (std::size_t i = 0; i < items.size(); ++i) {
        const std::string ip = p + ".items[" + std::to_string(i) + "]";
        if (!expect_map(items[i], ip)) continue;
        fields(items[i], ip, {"id", "prompt", "targets", "correct_target_ids", "weight", "time_limit_s", "hint"});
        IqItem item;
        item.id = req_string(items[i], ip, "id");
        item.prompt = req_string(items[i], ip, "prompt");
        item.weight = opt_number(items[i], ip, "weight").value_or(1.0);
        item.time_limit_s = opt_number(items[i], ip, "time_limit_s").value_or(120.0);
        item.hint = opt_string(items[i], ip, "hint");
        item.correct_target_ids = string_list(items[i], ip, "correct_target_ids", true);
        auto targets = seq(items[i], ip, "targets", true);
        for (std::size_t t = 0; t < targets.size(); ++t) {
          const std::string tp = ip + ".targets[" + std::to_string(t) + "]";
          if (!expect_map(targets[t], tp)) continue;
          fields(targets[t], tp, {"id", "label", "asset_ref"});
          InteractionTarget tg;
          tg.id = req_string(targets[t], tp, "id");
          tg.label = opt_string(targets[t], tp, "label").value_or("");
          tg.asset_ref = opt_string(targets[t], tp, "asset_ref").value_or("");
          item.targets.push_back(std::move(tg));
        }
        set.items.push_back(std::move(item));
      }
      m.body = std::move(set);
    } else if (*kind == "live") {
      fields(n, p, {"kind", "label", "situations"});
      LiveScenarioSpec live;
      auto sits = seq(n, p, "situations", true);
      for (std::size_t i = 0; i < sits.size(); ++i) {
        const std::string sp = p + ".situations[" + std::to_string(i) + "]";
        if (!expect_map(sits[i], sp)) continue;
        fields(sits[i], sp, {"id", "prompt", "action_options", "correct_action_id", "weight", "base_time_limit_s", "hint"});
        Situation s;
        s.id = req_string(sits[i], sp, "id");
        s.prompt = req_string(sits[i], sp, "prompt");
        s.correct_action_id = req_string(sits[i], sp, "correct_action_id");
        s.weight = opt_number(sits[i], sp, "weight").value_or(1.0);
        s.base_time_limit_s = opt_number(sits[i], sp, "base_time_limit_s").value_or(60.0);
        s.hint = opt_string(sits[i], sp, "hint");
        auto acts = seq(sits[i], sp, "action_options", true);
        for (std::size_t a = 0; a < acts.size(); ++a) {
          const std::string ap = sp + ".action_options[" + std::to_string(a) + "]";
          if (!expect_map(acts[a], ap)) continue;
          fields(acts[a], ap, {"id", "label", "distractor_rank"});
          ActionOption act;
          act.id = req_string(acts[a], ap, "id");
          act.label = opt_string(acts[a], ap, "label").value_or("");
          act.distractor_rank = rank(acts[a], ap);
          s.action_options.push_back(std::move(act));
        }
        live.situations.push_back(std::move(s));
      }
      m.body = std::move(live);
    } else {
      error(n["kind"], p + ".kind", "bad-value", "module kind must be one of mcq, iq, live; got '" + *kind + "'");
      return std::nullopt;
    }
    return m;
  }

  std::vector<ParseDiagnostic>& out_;
  std::map<std::string, YAML::Mark> marks_;
};

}  // namespace detail

inline ParseResult parse_scenario(std::string_view source) {
  ParseResult r;
  auto fail_at = [&](std::size_t offset, const char* code, std::string msg) {
    auto [line, col] = detail::line_col_at(source, offset);
    r.diagnostics.push_back({Severity::Error, line, col, "", code, std::move(msg)});
    return r;
  };
  if (auto bad = detail::first_invalid_utf8(source)) return fail_at(*bad, "invalid-utf8", "source is not valid UTF-8");
  if (source.find('\0') != std::string_view::npos)
    return fail_at(source.find('\0'), "syntax-error", "NUL byte in source");
  if (auto deep = detail::excessive_nesting(source)) return fail_at(*deep, "nesting-too-deep", "document nests too deeply");

  YAML::Node root;
  try {
    root = YAML::Load(std::string(source));
  } catch (const YAML::Exception& e) {
    const int line = e.mark.is_null() ? 1 : e.mark.line + 1;
    const int col = e.mark.is_null() ? 1 : e.mark.column + 1;
    r.diagnostics.push_back({Severity::Error, line, col, "", "syntax-error", e.msg});
    return r;
  }
  if (!root.IsDefined() || root.IsNull()) return fail_at(0, "syntax-error", "empty document");

  std::vector<ParseDiagnostic> structural;
  detail::ScnReader reader(structural);
  ScenarioData data;
  try {
    data = reader.read(root);
  } catch (const YAML::Exception& e) {
    structural.push_back({Severity::Error, e.mark.is_null() ? 1 : e.mark.line + 1,
                          e.mark.is_null() ? 1 : e.mark.column + 1, "", "syntax-error", e.what()});
  }
  r.diagnostics = std::move(structural);
  if (has_errors(r.diagnostics)) return r;

  for (auto d : validate_scenario(data)) {
    const auto m = reader.mark_for(d.path);
    d.line = m.is_null() ? 1 : m.line + 1;
    d.column = m.is_null() ? 1 : m.column + 1;
    r.diagnostics.push_back(std::move(d));
  }
  if (!has_errors(r.diagnostics)) r.scenario = Scenario::create(std::move(data));
  return r;
}

// Canonical `.scn` text: fixed key order, every string double-quoted,
// numbers in shortest round-trip form. parse(print(s)) == s.
inline std::string print_scenario(const ScenarioData& s) {
  auto num = [](double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string out(buf, res.ptr);
    if (out.find_first_of(".eEn") == std::string::npos) out += ".0";
    return out;
  };
  auto str = [](YAML::Emitter& e, const std::string& v) { e << YAML::DoubleQuoted << v; };

  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "id" << YAML::Value;
  str(e, s.id);
  e << YAML::Key << "title" << YAML::Value;
  str(e, s.title);
  e << YAML::Key << "version" << YAML::Value << s.version;
  e << YAML::Key << "score_basis" << YAML::Value
    << (s.score_basis == ScoreBasis::Correctness ? "correctness" : "completion");
  e << YAML::Key << "modules" << YAML::Value << YAML::BeginSeq;
  for (const auto& m : s.modules) {
    e << YAML::BeginMap;
    std::visit(
        [&](const auto& body) {
          using T = std::decay_t<decltype(body)>;
          if constexpr (std::is_same_v<T, McqSet>) {
            e << YAML::Key << "kind" << YAML::Value << "mcq";
            if (!m.label.empty()) { e << YAML::Key << "label" << YAML::Value; str(e, m.label); }
            e << YAML::Key << "items" << YAML::Value << YAML::BeginSeq;
            for (const auto& it : body.items) {
              e << YAML::BeginMap;
              e << YAML::Key << "id" << YAML::Value; str(e, it.id);
              e << YAML::Key << "prompt" << YAML::Value; str(e, it.prompt);
              if (!it.asset_refs.empty()) {
                e << YAML::Key << "asset_refs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
                for (const auto& a : it.asset_refs) str(e, a);
                e << YAML::EndSeq;
              }
              e << YAML::Key << "weight" << YAML::Value << num(it.weight);
              e << YAML::Key << "time_limit_s" << YAML::Value << num(it.time_limit_s);
              if (it.hint) { e << YAML::Key << "hint" << YAML::Value; str(e, *it.hint); }
              e << YAML::Key << "options" << YAML::Value << YAML::BeginSeq;
              for (const auto& o : it.options) {
                e << YAML::Flow << YAML::BeginMap;
                e << YAML::Key << "id" << YAML::Value; str(e, o.id);
                e << YAML::Key << "text" << YAML::Value; str(e, o.text);
                e << YAML::Key << "correct" << YAML::Value << (o.correct ? "true" : "false");
                e << YAML::Key << "distractor_rank" << YAML::Value << o.distractor_rank;
                e << YAML::EndMap;
              }
              e << YAML::EndSeq << YAML::EndMap;
            }
            e << YAML::EndSeq;
          } else if constexpr (std::is_same_v<T, IqSet>) {
            e << YAML::Key << "kind" << YAML::Value << "iq";
            if (!m.label.empty()) { e << YAML::Key << "label" << YAML::Value; str(e, m.label); }
            e << YAML::Key << "items" << YAML::Value << YAML::BeginSeq;
            for (const auto& it : body.items) {
              e << YAML::BeginMap;
              e << YAML::Key << "id" << YAML::Value; str(e, it.id);
              e << YAML::Key << "prompt" << YAML::Value; str(e, it.prompt);
              e << YAML::Key << "weight" << YAML::Value << num(it.weight);
              e << YAML::Key << "time_limit_s" << YAML::Value << num(it.time_limit_s);
              if (it.hint) { e << YAML::Key << "hint" << YAML::Value; str(e, *it.hint); }
              e << YAML::Key << "targets" << YAML::Value << YAML::BeginSeq;
              for (const auto& t : it.targets) {
                e << YAML::Flow << YAML::BeginMap;
                e << YAML::Key << "id" << YAML::Value; str(e, t.id);
                e << YAML::Key << "label" << YAML::Value; str(e, t.label);
                e << YAML::Key << "asset_ref" << YAML::Value; str(e, t.asset_ref);
                e << YAML::EndMap;
              }
              e << YAML::EndSeq;
              e << YAML::Key << "correct_target_ids" << YAML::Value << YAML::Flow << YAML::BeginSeq;
              for (const auto& c : it.correct_target_ids) str(e, c);
              e << YAML::EndSeq << YAML::EndMap;
            }
            e << YAML::EndSeq;
          } else {
            e << YAML::Key << "kind" << YAML::Value << "live";
            if (!m.label.empty()) { e << YAML::Key << "label" << YAML::Value; str(e, m.label); }
            e << YAML::Key << "situations" << YAML::Value << YAML::BeginSeq;
            for (const auto& s : body.situations) {
              e << YAML::BeginMap;
              e << YAML::Key << "id" << YAML::Value; str(e, s.id);
              e << YAML::Key << "prompt" << YAML::Value; str(e, s.prompt);
              e << YAML::Key << "weight" << YAML::Value << num(s.weight);
              e << YAML::Key << "base_time_limit_s" << YAML::Value << num(s.base_time_limit_s);
              if (s.hint) { e << YAML::Key << "hint" << YAML::Value; str(e, *s.hint); }
              e << YAML::Key << "correct_action_id" << YAML::Value; str(e, s.correct_action_id);
              e << YAML::Key << "action_options" << YAML::Value << YAML::BeginSeq;
              for (const auto& a : s.action_options) {
                e << YAML::Flow << YAML::BeginMap;
                e << YAML::Key << "id" << YAML::Value; str(e, a.id);
                e << YAML::Key << "label" << YAML::Value; str(e, a.label);
                e << YAML::Key << "distractor_rank" << YAML::Value << a.distractor_rank;
                e << YAML::EndMap;
              }
              e << YAML::EndSeq << YAML::EndMap;
            }
            e << YAML::EndSeq;
          }
        },
        m.body);
    e << YAML::EndMap;
  }
  e << YAML::EndSeq << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

inline std::string print_scenario(const Scenario& s) { return print_scenario(s.data()); }

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Loads and parses a scenario file; any Error diagnostic is raised as a
// ScenarioError carrying the full diagnostic list.
inline Scenario load_scenario(const std::string& path) {
  auto r = parse_scenario(read_file(path));
  if (!r.ok()) throw ScenarioError(std::move(r.diagnostics));
  return std::move(*r.scenario);
}

}  // namespace trainforge
