#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "raise/cell.hpp"
#include "raise/sandbox.hpp"
#include "raise/types.hpp"

namespace raisesql {

struct ResultSet {
  std::size_t column_count = 0;
  std::vector<std::vector<CellValue>> rows;
};

struct EvalError {
  std::string message;
};

using EvalExecution = std::variant<ResultSet, EvalError>;

inline constexpr std::size_t kEvalRowCeiling = 100'000;

/// Materializes the full result (canonicalized) up to kEvalRowCeiling rows.
EvalExecution execute_for_eval(Connection& conn, std::string_view sql,
                               std::chrono::milliseconds timeout = std::chrono::seconds(30),
                               std::size_t ceiling = kEvalRowCeiling);

/// Equal column counts and equal sets of rows: duplicates collapse, row
/// order is ignored, column order within a row matters.
bool execution_match(const ResultSet& pred, const ResultSet& gold);

struct CandidateFlag {
  std::string backend_id;
  int round = 1;
  bool postprocessed = false;
  bool match = false;
  bool operator==(const CandidateFlag&) const = default;
};

struct EvalRecord {
  std::string question_id;
  Difficulty stratum = Difficulty::unknown;
  std::vector<CandidateFlag> candidates;
  std::optional<int> first_correct_round;
  // Set when the gold query itself failed to execute.
  std::optional<std::string> gold_error;

  bool operator==(const EvalRecord&) const = default;
};

/// Derives first_correct_round from the flags.
EvalRecord make_eval_record(std::string question_id, Difficulty stratum, std::vector<CandidateFlag> flags);

/// Scores candidates against the question's gold SQL on `conn`.
EvalRecord evaluate_candidates(const Question& q, const std::vector<SqlCandidate>& candidates, Connection& conn,
                               std::chrono::milliseconds timeout = std::chrono::seconds(30));

/// Fraction of records with a matching candidate in rounds 1..n.
double best_of_n(const std::vector<EvalRecord>& records, int n);

/// Fraction of records whose round-1 candidate from (backend, postprocessed)
/// matches: execution accuracy of one generation configuration. With
/// `postprocessed`, a record without a rewritten candidate is scored by the
/// original one, which is what that configuration returned.
double execution_accuracy(const std::vector<EvalRecord>& records, const std::string& backend_id, bool postprocessed);

}  // namespace raisesql
