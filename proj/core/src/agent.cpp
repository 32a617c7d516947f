#include "raise/agent.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "raise/error.hpp"
#include "raise/protocol.hpp"
#include "raise/tools.hpp"

namespace raisesql {
namespace {

void append_line(std::string& transcript, std::string_view text) {
  if (!transcript.empty() && transcript.back() != '\n') transcript += '\n';
  transcript += text;
  transcript += '\n';
}

void append_result(std::string& transcript, std::string_view result) {
  transcript += fmt::format("\n{}\n{}\n{}\n", kResultOpen, result, kResultClose);
}

}  // namespace

void AgentConfig::validate() const {
  if (!(0 < no_tool_token_cap && no_tool_token_cap < total_token_cap)) {
    throw ConfigError(fmt::format("agent caps must satisfy 0 < no_tool_token_cap ({}) < total_token_cap ({})",
                                  no_tool_token_cap, total_token_cap));
  }
  if (max_operations == 0) throw ConfigError("max_operations must be positive");
  if (final_answer_tokens <= 0) throw ConfigError("final_answer_tokens must be positive");
}

std::string_view to_string(ControlAction a) {
  switch (a) {
    case ControlAction::none: return "none";
    case ControlAction::inject_nudge: return "inject_nudge";
    case ControlAction::inject_terminator: break;
  }
  return "inject_terminator";
}

ControlAction apply_control(BudgetState& budget, const AgentConfig& cfg, const GenerationProgress& event) {
  budget.tokens_total += event.tokens;
  budget.tokens_since_last_tool += event.tokens;
  if (event.tool_result_appended) budget.tokens_since_last_tool = 0;
  if (budget.terminated) return ControlAction::none;
  if (budget.tokens_total > cfg.total_token_cap) {
    budget.terminated = true;
    return ControlAction::inject_terminator;
  }
  if (budget.tokens_since_last_tool > cfg.no_tool_token_cap) {
    ++budget.nudges_issued;
    return ControlAction::inject_nudge;
  }
  return ControlAction::none;
}

std::string tool_list_text(AgentKind kind) {
  std::string out =
      "- read_table_names(): list the tables of the database.\n"
      "- read_table_columns(table_name: str): columns of a table with declared types, primary and foreign keys.\n"
      "- read_columns_documentation(column_names: list[str]): documentation of columns given as \"table.column\".";
  if (kind == AgentKind::interaction) out += "\n- run_query(sql: str): run a read-only SQLite query and see its first rows.";
  return out;
}

ExplorationTrace run_agent(const Question& question, const DbCatalog& catalog, Connection& conn, Backend& backend,
                           const AgentConfig& cfg, const PromptSet& prompts) {
  cfg.validate();
  ExplorationTrace trace;
  trace.question_id = question.id;
  trace.agent_kind = cfg.agent_kind;

  const std::string& tpl = cfg.agent_kind == AgentKind::interaction ? prompts.interaction_agent : prompts.static_agent;
  const std::string user = render_template(tpl, {{"question", question.text},
                                                 {"evidence", question.evidence.empty() ? "(none)" : question.evidence},
                                                 {"tool_list", tool_list_text(cfg.agent_kind)}});
  std::string& transcript = trace.raw_transcript;
  transcript = cfg.reasoning_prefix;

  auto request = [&](std::int64_t max_tokens, bool allow_tools) {
    CompletionRequest req;
    req.messages = {{"user", user}};
    req.prefill = transcript;
    if (allow_tools) req.stop_sequences = {std::string(kExecuteTag)};
    req.max_tokens = max_tokens;
    req.temperature = cfg.temperature;
    req.seed = cfg.seed;
    return backend.complete(req);
  };

  // Terminator plus exactly one completion without tool execution.
  auto final_completion = [&](Termination why) {
    append_line(transcript, cfg.terminate_text);
    CompletionChunk chunk = request(cfg.final_answer_tokens, false);
    if (chunk.finish == FinishReason::error) {
      trace.termination = Termination::backend_error;
      trace.error = chunk.error;
      return;
    }
    transcript += chunk.text;
    trace.tokens_generated += chunk.token_count;
    trace.termination = why;
  };

  BudgetState budget;
  while (true) {
    std::int64_t nudge_room = budget.tokens_since_last_tool <= cfg.no_tool_token_cap
                                  ? cfg.no_tool_token_cap + 1 - budget.tokens_since_last_tool
                                  : cfg.no_tool_token_cap;
    std::int64_t total_room = cfg.total_token_cap + 1 - budget.tokens_total;
    std::int64_t max_tokens = std::max(std::min(nudge_room, total_room), kMinChunkTokens);

    CompletionChunk chunk = request(max_tokens, true);
    if (chunk.finish == FinishReason::error) {
      trace.termination = Termination::backend_error;
      trace.error = chunk.error;
      break;
    }

    bool tool_appended = false;
    bool finished = false;
    std::string text = std::move(chunk.text);
    if (auto span = scan_stream(text)) {
      // Anything after the tag belongs to no one; the turn ends at "[EXECUTE]".
      text.resize(span->tag_end);
      transcript += text;
      ParseOutcome outcome = parse_invocation(span_text(text, *span));
      if (const auto* bad = std::get_if<Malformed>(&outcome)) {
        append_result(transcript, malformed_feedback(*bad));
      } else {
        const auto& call = std::get<ToolCall>(outcome);
        if (cfg.agent_kind == AgentKind::static_schema && call.tool == Tool::run_query) {
          append_result(transcript, kStaticRefusal);
        } else {
          RenderedResult result = execute_tool(call, catalog, conn, cfg.limits);
          OperationRecord op;
          op.index = trace.operations.size();
          op.call = call;
          op.rendered_result = result.text;
          if (result.is_error) {
            op.error = result.text;
          } else {
            op.row_count = result.row_count;
          }
          op.truncated = result.truncated;
          trace.operations.push_back(std::move(op));
          append_result(transcript, result.text);
          tool_appended = true;
        }
      }
    } else {
      transcript += text;
      finished = chunk.finish != FinishReason::length || chunk.token_count == 0;
    }

    trace.tokens_generated += chunk.token_count;
    ControlAction action = apply_control(budget, cfg, {chunk.token_count, tool_appended});
    if (finished) {
      trace.termination = Termination::natural;
      break;
    }
    if (action == ControlAction::inject_terminator) {
      final_completion(Termination::forced_budget);
      break;
    }
    if (trace.operations.size() >= cfg.max_operations) {
      final_completion(Termination::operation_cap);
      break;
    }
    if (action == ControlAction::inject_nudge) append_line(transcript, cfg.nudge_text);
  }
  return trace;
}

}  // namespace raisesql
