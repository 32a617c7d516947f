#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "raise/backend.hpp"
#include "raise/catalog.hpp"
#include "raise/prompts.hpp"
#include "raise/sandbox.hpp"
#include "raise/types.hpp"

namespace raisesql {

inline constexpr std::string_view kReasoningPrefix =
    "Before thinking about the solution, I will have a deep understanding of the data and not make any "
    "assumptions about it.";
inline constexpr std::string_view kNudgeText =
    "Wait, I am thinking for too long without interacting with the database. I can run queries and see the "
    "results with the command [RUN] run_query(...) [EXECUTE]";
inline constexpr std::string_view kTerminateText =
    "I am thinking for too long. I will generate my final solution now.";

inline constexpr std::string_view kResultOpen = "[RESULT]";
inline constexpr std::string_view kResultClose = "[/RESULT]";
inline constexpr std::string_view kStaticRefusal = "run_query is not available";

// Smallest completion requested inside the loop; chunk boundaries may pass a
// cap by less than this.
inline constexpr std::int64_t kMinChunkTokens = 16;

struct AgentConfig {
  AgentKind agent_kind = AgentKind::interaction;
  std::int64_t no_tool_token_cap = 1400;
  std::int64_t total_token_cap = 10'000;
  std::size_t max_operations = 40;
  std::string reasoning_prefix{kReasoningPrefix};
  std::string nudge_text{kNudgeText};
  std::string terminate_text{kTerminateText};
  // Token allowance of the single completion requested after the terminator.
  std::int64_t final_answer_tokens = 2048;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
  ExecLimits limits;

  /// Throws ConfigError unless 0 < no_tool_token_cap < total_token_cap.
  void validate() const;
};

struct BudgetState {
  std::int64_t tokens_total = 0;
  std::int64_t tokens_since_last_tool = 0;
  int nudges_issued = 0;
  bool terminated = false;
};

/// What happened since the previous chunk boundary.
struct GenerationProgress {
  std::int64_t tokens = 0;
  // An executed tool's result was appended to the context.
  bool tool_result_appended = false;
};

enum class ControlAction { none, inject_nudge, inject_terminator };

std::string_view to_string(ControlAction a);

/// Accounts one chunk boundary and decides what to inject. Terminator once
/// tokens_total > total_token_cap (takes precedence), nudge whenever
/// tokens_since_last_tool > no_tool_token_cap. Nothing fires after
/// termination.
ControlAction apply_control(BudgetState& budget, const AgentConfig& cfg, const GenerationProgress& event);

/// Tool list shown in the agent's system prompt.
std::string tool_list_text(AgentKind kind);

/// Runs one question through the agent loop: generate until "[EXECUTE]",
/// execute the invocation, append its result, repeat until the model stops,
/// the budget runs out or max_operations is reached.
ExplorationTrace run_agent(const Question& question, const DbCatalog& catalog, Connection& conn, Backend& backend,
                           const AgentConfig& cfg, const PromptSet& prompts = PromptSet::defaults());

}  // namespace raisesql
