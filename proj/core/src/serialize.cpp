#include "raise/serialize.hpp"

#include <algorithm>

#include "raise/error.hpp"

namespace raisesql {
namespace {

using nlohmann::json;

// Field access that reports the offending field instead of a json exception.
const json& field(const json& j, const char* name) {
  if (!j.is_object()) throw MalformedRecord(name);
  auto it = j.find(name);
  if (it == j.end()) throw MalformedRecord(name);
  return *it;
}

template <typename T>
T get(const json& j, const char* name) {
  const json& v = field(j, name);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw MalformedRecord(name);
  }
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* name) {
  if (!j.is_object()) throw MalformedRecord(name);
  auto it = j.find(name);
  if (it == j.end() || it->is_null()) return std::nullopt;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw MalformedRecord(name);
  }
}

template <typename T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

void check_version(const json& j) {
  if (j.is_object() && j.contains("format_version") && j["format_version"] != kFormatVersion) {
    throw MalformedRecord("format_version");
  }
}

}  // namespace

void to_json(json& j, const ToolCall& c) {
  json args = json::array();
  for (const auto& a : c.args) {
    if (const auto* s = std::get_if<std::string>(&a)) {
      args.push_back(*s);
    } else {
      args.push_back(std::get<std::vector<std::string>>(a));
    }
  }
  j = json{{"tool", tool_name(c.tool)}, {"args", std::move(args)}};
}

void from_json(const json& j, ToolCall& c) {
  auto tool = tool_from_name(get<std::string>(j, "tool"));
  if (!tool) throw MalformedRecord("tool");
  c.tool = *tool;
  c.args.clear();
  const json& args = field(j, "args");
  if (!args.is_array()) throw MalformedRecord("args");
  for (const auto& a : args) {
    if (a.is_string()) {
      c.args.emplace_back(a.get<std::string>());
    } else if (a.is_array() && std::all_of(a.begin(), a.end(), [](const json& x) { return x.is_string(); })) {
      c.args.emplace_back(a.get<std::vector<std::string>>());
    } else {
      throw MalformedRecord("args");
    }
  }
}

void to_json(json& j, const OperationRecord& r) {
  j = json{{"index", r.index},         {"call", r.call},   {"rendered_result", r.rendered_result},
           {"row_count", opt(r.row_count)}, {"error", opt(r.error)}, {"truncated", r.truncated}};
}

void from_json(const json& j, OperationRecord& r) {
  r.index = get<std::size_t>(j, "index");
  r.call = get<ToolCall>(j, "call");
  r.rendered_result = get<std::string>(j, "rendered_result");
  r.row_count = get_opt<std::int64_t>(j, "row_count");
  r.error = get_opt<std::string>(j, "error");
  r.truncated = get_opt<bool>(j, "truncated").value_or(false);
}

void to_json(json& j, const ExplorationTrace& t) {
  j = json{{"format_version", kFormatVersion},
           {"question_id", t.question_id},
           {"agent_kind", to_string(t.agent_kind)},
           {"operations", t.operations},
           {"raw_transcript", t.raw_transcript},
           {"tokens_generated", t.tokens_generated},
           {"termination", to_string(t.termination)},
           {"error", t.error}};
}

void from_json(const json& j, ExplorationTrace& t) {
  check_version(j);
  t.question_id = get<std::string>(j, "question_id");
  auto kind = agent_kind_from_string(get<std::string>(j, "agent_kind"));
  if (!kind) throw MalformedRecord("agent_kind");
  t.agent_kind = *kind;
  t.operations = get<std::vector<OperationRecord>>(j, "operations");
  t.raw_transcript = get<std::string>(j, "raw_transcript");
  t.tokens_generated = get<std::int64_t>(j, "tokens_generated");
  auto term = termination_from_string(get<std::string>(j, "termination"));
  if (!term) throw MalformedRecord("termination");
  t.termination = *term;
  t.error = get_opt<std::string>(j, "error").value_or("");
}

void to_json(json& j, const ExecOutcome& o) {
  j = json{{"kind", to_string(o.kind)}, {"row_count", o.row_count}, {"message", o.message}};
}

void from_json(const json& j, ExecOutcome& o) {
  auto kind = get<std::string>(j, "kind");
  if (kind == "ok") {
    o.kind = ExecOutcome::Kind::ok;
  } else if (kind == "error") {
    o.kind = ExecOutcome::Kind::error;
  } else if (kind == "empty") {
    o.kind = ExecOutcome::Kind::empty;
  } else {
    throw MalformedRecord("kind");
  }
  o.row_count = get<std::int64_t>(j, "row_count");
  o.message = get_opt<std::string>(j, "message").value_or("");
}

void to_json(json& j, const SqlCandidate& c) {
  j = json{{"format_version", kFormatVersion},
           {"sql", c.sql},
           {"backend_id", c.backend_id},
           {"round", c.round},
           {"postprocessed", c.postprocessed},
           {"exec_outcome", c.exec_outcome}};
}

void from_json(const json& j, SqlCandidate& c) {
  check_version(j);
  c.sql = get<std::string>(j, "sql");
  c.backend_id = get<std::string>(j, "backend_id");
  c.round = get<int>(j, "round");
  c.postprocessed = get<bool>(j, "postprocessed");
  c.exec_outcome = get<ExecOutcome>(j, "exec_outcome");
}

void to_json(json& j, const CandidateFlag& f) {
  j = json{{"backend_id", f.backend_id}, {"round", f.round}, {"postprocessed", f.postprocessed}, {"match", f.match}};
}

void from_json(const json& j, CandidateFlag& f) {
  f.backend_id = get<std::string>(j, "backend_id");
  f.round = get<int>(j, "round");
  f.postprocessed = get<bool>(j, "postprocessed");
  f.match = get<bool>(j, "match");
}

void to_json(json& j, const EvalRecord& r) {
  j = json{{"format_version", kFormatVersion},
           {"question_id", r.question_id},
           {"stratum", to_string(r.stratum)},
           {"candidates", r.candidates},
           {"first_correct_round", opt(r.first_correct_round)},
           {"gold_error", opt(r.gold_error)}};
}

void from_json(const json& j, EvalRecord& r) {
  check_version(j);
  r.question_id = get<std::string>(j, "question_id");
  r.stratum = difficulty_from_string(get<std::string>(j, "stratum"));
  r.candidates = get<std::vector<CandidateFlag>>(j, "candidates");
  r.first_correct_round = get_opt<int>(j, "first_correct_round");
  r.gold_error = get_opt<std::string>(j, "gold_error");
}

void to_json(json& j, const Question& q) {
  j = json{{"question_id", q.id},     {"db_id", q.db_id},           {"question", q.text},
           {"evidence", q.evidence}, {"SQL", opt(q.gold_sql)}, {"difficulty", to_string(q.difficulty)}};
}

void to_json(json& j, const ScalingPoint& p) {
  j = json{{"k", p.k},
           {"agent_kind", to_string(p.agent_kind)},
           {"refinement", p.refinement_enabled},
           {"ex", p.execution_accuracy},
           {"questions", p.questions},
           {"correct", p.correct}};
}

}  // namespace raisesql
