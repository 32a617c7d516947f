#include "raise/generation.hpp"

#include <algorithm>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "raise/agent.hpp"
#include "raise/evaluation.hpp"
#include "raise/protocol.hpp"
#include "raise/select_list.hpp"

namespace raisesql {
namespace {

ExecOutcome execute_candidate(Connection& conn, const std::string& sql, std::chrono::milliseconds timeout) {
  StatementRun run = run_statement(conn, sql, timeout, 0, kEvalRowCeiling);
  switch (run.status) {
    case StatementRun::Status::ok: return run.total_rows > 0 ? ExecOutcome::success(run.total_rows) : ExecOutcome::no_rows();
    default: return ExecOutcome::failure(run.message);
  }
}

std::map<std::string, std::string> prompt_vars(const GenerationPrompt& prompt) {
  return {{"question", prompt.question},
          {"evidence", prompt.evidence.empty() ? "(none)" : prompt.evidence},
          {"operations", render_operations(prompt.operations_included)},
          {"feedback", render_feedback(prompt.refinement_feedback)}};
}

CompletionRequest single_turn(std::string content, const GenerationOptions& opts) {
  CompletionRequest req;
  req.messages = {{"user", std::move(content)}};
  req.max_tokens = opts.max_tokens;
  req.temperature = opts.temperature;
  req.seed = opts.seed;
  return req;
}

}  // namespace

GenerationPrompt build_generation_prompt(const Question& question, const ExplorationTrace& trace, std::size_t k) {
  GenerationPrompt p;
  p.question = question.text;
  p.evidence = question.evidence;
  std::size_t n = std::min(k, trace.operations.size());
  p.operations_included.assign(trace.operations.begin(), trace.operations.begin() + static_cast<std::ptrdiff_t>(n));
  return p;
}

std::string render_operations(const std::vector<OperationRecord>& ops) {
  if (ops.empty()) return "(no commands were executed)\n";
  std::string out;
  for (const auto& op : ops) {
    out += fmt::format("{}\n{}\n{}\n{}\n\n", render_tagged(op.call), kResultOpen, op.rendered_result, kResultClose);
  }
  return out;
}

std::string render_feedback(const std::vector<RefinementNote>& feedback) {
  if (feedback.empty()) return "";
  std::string out = "Previous attempts were rejected:\n";
  for (std::size_t i = 0; i < feedback.size(); ++i) {
    out += fmt::format("Attempt {}:\n```sql\n{}\n```\nOutcome: {}\n\n", i + 1,
                       feedback[i].sql.empty() ? "(no query)" : feedback[i].sql, feedback[i].note);
  }
  return out;
}

std::string render_generation_prompt(const GenerationPrompt& prompt, const PromptSet& prompts) {
  return render_template(prompts.final_generation, prompt_vars(prompt));
}

SqlCandidate generate_sql(const GenerationPrompt& prompt, Backend& backend, Connection& conn, const PromptSet& prompts,
                          const GenerationOptions& opts, int round) {
  SqlCandidate cand;
  cand.backend_id = backend.id();
  cand.round = round;
  CompletionChunk chunk = backend.complete(single_turn(render_generation_prompt(prompt, prompts), opts));
  if (chunk.finish == FinishReason::error) {
    cand.exec_outcome = ExecOutcome::failure("backend error: " + chunk.error);
    return cand;
  }
  auto sql = extract_final_sql(chunk.text);
  if (!sql) {
    cand.exec_outcome = ExecOutcome::failure(std::string(kNoSqlProduced));
    return cand;
  }
  cand.sql = std::move(*sql);
  cand.exec_outcome = execute_candidate(conn, cand.sql, opts.timeout);
  return cand;
}

RefinementOutcome refine_sql(const GenerationPrompt& prompt, Backend& backend, Connection& conn,
                             const PromptSet& prompts, const GenerationOptions& opts, int round) {
  RefinementOutcome out;
  GenerationPrompt working = prompt;
  const int max_attempts = 1 + std::max(0, opts.max_retries);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    out.final = generate_sql(working, backend, conn, prompts, opts, round);
    out.attempts = attempt;
    if (out.final.exec_outcome.kind == ExecOutcome::Kind::ok) {
      out.succeeded = true;
      break;
    }
    if (attempt == max_attempts) break;
    RefinementNote note{out.final.sql, out.final.exec_outcome.kind == ExecOutcome::Kind::empty
                                           ? std::string(kZeroRowsNote)
                                           : out.final.exec_outcome.message};
    out.feedback.push_back(note);
    working.refinement_feedback.push_back(std::move(note));
  }
  return out;
}

std::optional<std::vector<std::string>> parse_column_reply(std::string_view reply) {
  auto open = reply.find('[');
  auto close = reply.rfind(']');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
  auto j = nlohmann::json::parse(reply.substr(open, close - open + 1), nullptr, false);
  if (j.is_discarded() || !j.is_array() || j.empty()) return std::nullopt;
  std::vector<std::string> cols;
  for (const auto& item : j) {
    if (!item.is_string()) return std::nullopt;
    auto s = item.get<std::string>();
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::nullopt;
    cols.push_back(s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1));
  }
  return cols;
}

SqlCandidate postprocess_columns(const SqlCandidate& candidate, const GenerationPrompt& prompt, Backend& backend,
                                 Connection& conn, const PromptSet& prompts, const GenerationOptions& opts) {
  SqlCandidate unchanged = candidate;
  unchanged.postprocessed = false;
  if (candidate.sql.empty() || !locate_outer_select_list(candidate.sql)) {
    spdlog::warn("column post-processing skipped: no outer select-list in candidate from {}", candidate.backend_id);
    return unchanged;
  }
  auto vars = prompt_vars(prompt);
  vars["candidate_sql"] = candidate.sql;
  CompletionChunk chunk = backend.complete(single_turn(render_template(prompts.column_postprocess, vars), opts));
  if (chunk.finish == FinishReason::error) {
    spdlog::warn("column post-processing skipped: {}", chunk.error);
    return unchanged;
  }
  auto cols = parse_column_reply(chunk.text);
  if (!cols) {
    spdlog::warn("column post-processing skipped: unparseable column list from {}", backend.id());
    return unchanged;
  }
  auto rewritten = rewrite_select_list(candidate.sql, *cols);
  if (!rewritten) {
    spdlog::warn("column post-processing skipped: rewrite failed");
    return unchanged;
  }
  SqlCandidate out = candidate;
  out.sql = std::move(*rewritten);
  out.postprocessed = true;
  out.exec_outcome = execute_candidate(conn, out.sql, opts.timeout);
  return out;
}

std::vector<SqlCandidate> fan_out_candidates(const Question& question, const ExplorationTrace& trace, std::size_t k,
                                             const std::vector<GeneratorSpec>& generators, int rounds,
                                             Connection& conn, const PromptSet& prompts, const FanOutOptions& opts) {
  std::vector<SqlCandidate> out;
  const GenerationPrompt prompt = build_generation_prompt(question, trace, k);
  for (int round = 1; round <= rounds; ++round) {
    for (std::size_t g = 0; g < generators.size(); ++g) {
      Backend& backend = *generators[g].backend;
      GenerationOptions gen = opts.generation;
      if (gen.seed) *gen.seed += static_cast<std::uint64_t>(round) * 1000 + g;
      SqlCandidate cand = opts.refinement ? refine_sql(prompt, backend, conn, prompts, gen, round).final
                                          : generate_sql(prompt, backend, conn, prompts, gen, round);
      cand.round = round;
      cand.backend_id = backend.id();
      out.push_back(cand);
      if (generators[g].postprocess) {
        Backend& columns = opts.postprocess_backend ? *opts.postprocess_backend : backend;
        SqlCandidate pp = postprocess_columns(cand, prompt, columns, conn, prompts, gen);
        pp.round = round;
        pp.backend_id = backend.id();
        out.push_back(std::move(pp));
      }
    }
  }
  return out;
}

}  // namespace raisesql
