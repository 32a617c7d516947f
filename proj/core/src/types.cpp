#include "raise/types.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "raise/error.hpp"

namespace raisesql {
namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

// Accepts strings and numbers (question ids are integers in the benchmark).
std::optional<std::string> scalar_field(const nlohmann::json& record, const char* key) {
  auto it = record.find(key);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<std::int64_t>());
  if (it->is_number()) return it->dump();
  return std::nullopt;
}

}  // namespace

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::simple: return "simple";
    case Difficulty::moderate: return "moderate";
    case Difficulty::challenging: return "challenging";
    case Difficulty::unknown: break;
  }
  return "unknown";
}

Difficulty difficulty_from_string(std::string_view s) {
  for (auto d : {Difficulty::simple, Difficulty::moderate, Difficulty::challenging}) {
    if (iequals(s, to_string(d))) return d;
  }
  return Difficulty::unknown;
}

Question parse_question_record(const nlohmann::json& record, std::string_view fallback_id) {
  if (!record.is_object()) throw MalformedRecord("question");
  auto text = scalar_field(record, "question");
  if (!text || text->empty()) throw MalformedRecord("question");
  auto db_id = scalar_field(record, "db_id");
  if (!db_id || db_id->empty()) throw MalformedRecord("db_id");

  Question q;
  q.text = std::move(*text);
  q.db_id = std::move(*db_id);
  if (auto id = scalar_field(record, "question_id")) {
    q.id = std::move(*id);
  } else if (auto alt = scalar_field(record, "id")) {
    q.id = std::move(*alt);
  } else {
    q.id = std::string(fallback_id);
  }
  q.evidence = scalar_field(record, "evidence").value_or("");
  if (auto sql = scalar_field(record, "SQL")) {
    q.gold_sql = std::move(sql);
  } else if (auto sql2 = scalar_field(record, "sql")) {
    q.gold_sql = std::move(sql2);
  }
  if (auto d = scalar_field(record, "difficulty")) q.difficulty = difficulty_from_string(*d);
  return q;
}

std::string_view tool_name(Tool t) {
  switch (t) {
    case Tool::read_table_names: return "read_table_names";
    case Tool::read_table_columns: return "read_table_columns";
    case Tool::read_columns_documentation: return "read_columns_documentation";
    case Tool::run_query: break;
  }
  return "run_query";
}

std::optional<Tool> tool_from_name(std::string_view name) {
  for (Tool t : kAllTools) {
    if (iequals(name, tool_name(t))) return t;
  }
  return std::nullopt;
}

std::size_t tool_arity(Tool t) { return t == Tool::read_table_names ? 0 : 1; }

bool is_valid(const ToolCall& call) {
  if (call.args.size() != tool_arity(call.tool)) return false;
  switch (call.tool) {
    case Tool::read_table_names: return true;
    case Tool::read_table_columns: return std::holds_alternative<std::string>(call.args[0]);
    case Tool::read_columns_documentation: return std::holds_alternative<std::vector<std::string>>(call.args[0]);
    case Tool::run_query: {
      const auto* sql = std::get_if<std::string>(&call.args[0]);
      return sql && !sql->empty();
    }
  }
  return false;
}

std::string_view to_string(AgentKind k) { return k == AgentKind::interaction ? "interaction" : "static"; }

std::optional<AgentKind> agent_kind_from_string(std::string_view s) {
  if (iequals(s, "interaction")) return AgentKind::interaction;
  if (iequals(s, "static")) return AgentKind::static_schema;
  return std::nullopt;
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::natural: return "natural";
    case Termination::forced_budget: return "forced_budget";
    case Termination::operation_cap: return "operation_cap";
    case Termination::backend_error: break;
  }
  return "backend_error";
}

std::optional<Termination> termination_from_string(std::string_view s) {
  for (auto t : {Termination::natural, Termination::forced_budget, Termination::operation_cap,
                 Termination::backend_error}) {
    if (s == to_string(t)) return t;
  }
  return std::nullopt;
}

std::string_view to_string(ExecOutcome::Kind k) {
  switch (k) {
    case ExecOutcome::Kind::ok: return "ok";
    case ExecOutcome::Kind::empty: return "empty";
    case ExecOutcome::Kind::error: break;
  }
  return "error";
}

}  // namespace raisesql
