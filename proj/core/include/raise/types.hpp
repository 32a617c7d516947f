#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace raisesql {

enum class Difficulty { simple, moderate, challenging, unknown };

std::string_view to_string(Difficulty d);
/// Case-insensitive; anything unrecognised maps to unknown.
Difficulty difficulty_from_string(std::string_view s);

struct Question {
  std::string id;
  std::string db_id;
  std::string text;
  std::string evidence;
  std::optional<std::string> gold_sql;
  Difficulty difficulty = Difficulty::unknown;

  bool operator==(const Question&) const = default;
};

/// Accepts the benchmark's record layout (question_id, db_id, question,
/// evidence, SQL, difficulty). Throws MalformedRecord naming the first missing
/// required field. Records without a question_id take `fallback_id`.
Question parse_question_record(const nlohmann::json& record, std::string_view fallback_id = {});

enum class Tool { read_table_names, read_table_columns, read_columns_documentation, run_query };

inline constexpr Tool kAllTools[] = {Tool::read_table_names, Tool::read_table_columns,
                                     Tool::read_columns_documentation, Tool::run_query};

std::string_view tool_name(Tool t);
std::optional<Tool> tool_from_name(std::string_view name);  // case-insensitive
std::size_t tool_arity(Tool t);

using ToolArg = std::variant<std::string, std::vector<std::string>>;

struct ToolCall {
  Tool tool = Tool::read_table_names;
  std::vector<ToolArg> args;

  bool operator==(const ToolCall&) const = default;

  static ToolCall table_names() { return {Tool::read_table_names, {}}; }
  static ToolCall table_columns(std::string table) { return {Tool::read_table_columns, {std::move(table)}}; }
  static ToolCall columns_documentation(std::vector<std::string> names) {
    return {Tool::read_columns_documentation, {std::move(names)}};
  }
  static ToolCall query(std::string sql) { return {Tool::run_query, {std::move(sql)}}; }
};

/// Arity and argument-kind check (run_query needs a non-empty string).
bool is_valid(const ToolCall& call);

struct OperationRecord {
  std::size_t index = 0;
  ToolCall call;
  // What the model saw, for successes and failures alike.
  std::string rendered_result;
  std::optional<std::int64_t> row_count;
  // Set when the invocation failed; rendered_result then carries the same text.
  std::optional<std::string> error;
  bool truncated = false;

  bool ok() const noexcept { return !error.has_value(); }
  bool operator==(const OperationRecord&) const = default;
};

enum class AgentKind { interaction, static_schema };

std::string_view to_string(AgentKind k);
std::optional<AgentKind> agent_kind_from_string(std::string_view s);

enum class Termination { natural, forced_budget, operation_cap, backend_error };

std::string_view to_string(Termination t);
std::optional<Termination> termination_from_string(std::string_view s);

struct ExplorationTrace {
  std::string question_id;
  AgentKind agent_kind = AgentKind::interaction;
  std::vector<OperationRecord> operations;
  std::string raw_transcript;
  std::int64_t tokens_generated = 0;
  Termination termination = Termination::natural;
  // Backend error text when termination == backend_error.
  std::string error;

  bool operator==(const ExplorationTrace&) const = default;
};

struct ExecOutcome {
  enum class Kind { ok, error, empty };
  Kind kind = Kind::error;
  std::int64_t row_count = 0;
  std::string message;

  static ExecOutcome success(std::int64_t rows) { return {Kind::ok, rows, {}}; }
  static ExecOutcome no_rows() { return {Kind::empty, 0, {}}; }
  static ExecOutcome failure(std::string msg) { return {Kind::error, 0, std::move(msg)}; }

  bool operator==(const ExecOutcome&) const = default;
};

std::string_view to_string(ExecOutcome::Kind k);

struct SqlCandidate {
  std::string sql;
  std::string backend_id;
  int round = 1;
  bool postprocessed = false;
  ExecOutcome exec_outcome;

  bool operator==(const SqlCandidate&) const = default;
};

}  // namespace raisesql
