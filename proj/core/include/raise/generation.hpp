#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "raise/backend.hpp"
#include "raise/prompts.hpp"
#include "raise/sandbox.hpp"
#include "raise/types.hpp"

namespace raisesql {

inline constexpr int kMaxRefinementRetries = 5;
inline constexpr std::string_view kNoSqlProduced = "no SQL produced";
inline constexpr std::string_view kZeroRowsNote = "query returned zero rows";

struct RefinementNote {
  std::string sql;
  std::string note;  // error text, or kZeroRowsNote
  bool operator==(const RefinementNote&) const = default;
};

struct GenerationPrompt {
  std::string question;
  std::string evidence;
  std::vector<OperationRecord> operations_included;
  std::vector<RefinementNote> refinement_feedback;
};

/// First min(k, |operations|) operations of the trace. The agent's own final
/// answer is never carried over.
GenerationPrompt build_generation_prompt(const Question& question, const ExplorationTrace& trace, std::size_t k);

std::string render_operations(const std::vector<OperationRecord>& ops);
std::string render_feedback(const std::vector<RefinementNote>& feedback);
std::string render_generation_prompt(const GenerationPrompt& prompt, const PromptSet& prompts);

struct GenerationOptions {
  double temperature = 0.0;
  std::int64_t max_tokens = 4096;
  std::optional<std::uint64_t> seed;
  std::chrono::milliseconds timeout{30'000};
  int max_retries = kMaxRefinementRetries;
};

/// One generation: prompt the backend, extract the SQL, execute it.
SqlCandidate generate_sql(const GenerationPrompt& prompt, Backend& backend, Connection& conn,
                          const PromptSet& prompts = PromptSet::defaults(), const GenerationOptions& opts = {},
                          int round = 1);

struct RefinementOutcome {
  SqlCandidate final;
  int attempts = 0;
  bool succeeded = false;
  std::vector<RefinementNote> feedback;
};

/// Regenerates until a candidate executes with at least one row, appending
/// each failure to the prompt's feedback, for at most 1 + max_retries
/// generations.
RefinementOutcome refine_sql(const GenerationPrompt& prompt, Backend& backend, Connection& conn,
                             const PromptSet& prompts = PromptSet::defaults(), const GenerationOptions& opts = {},
                             int round = 1);

/// Asks the backend which columns to select, in order, and splices them into
/// the outermost select-list. Falls back to the original candidate (with a
/// warning) when the SQL or the reply cannot be used.
SqlCandidate postprocess_columns(const SqlCandidate& candidate, const GenerationPrompt& prompt, Backend& backend,
                                 Connection& conn, const PromptSet& prompts = PromptSet::defaults(),
                                 const GenerationOptions& opts = {});

/// Parses the column list reply: a JSON array of strings, possibly fenced.
std::optional<std::vector<std::string>> parse_column_reply(std::string_view reply);

struct GeneratorSpec {
  Backend* backend = nullptr;
  // Also emit a column-post-processed variant of this generator's candidate.
  bool postprocess = false;
};

struct FanOutOptions {
  GenerationOptions generation;
  bool refinement = true;
  // Model that answers the column question; defaults to the generator itself.
  Backend* postprocess_backend = nullptr;
};

/// rounds x (generators + post-processing generators) candidates, ordered by
/// round, then generator, with each post-processed variant right after its
/// source.
std::vector<SqlCandidate> fan_out_candidates(const Question& question, const ExplorationTrace& trace, std::size_t k,
                                             const std::vector<GeneratorSpec>& generators, int rounds,
                                             Connection& conn, const PromptSet& prompts = PromptSet::defaults(),
                                             const FanOutOptions& opts = {});

}  // namespace raisesql
