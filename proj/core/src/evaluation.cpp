#include "raise/evaluation.hpp"

#include <algorithm>
#include <map>

namespace raisesql {
namespace {

bool row_less(const std::vector<CellValue>& a, const std::vector<CellValue>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto c = compare_cells(a[i], b[i]);
    if (c != 0) return c < 0;
  }
  return a.size() < b.size();
}

bool row_equal(const std::vector<CellValue>& a, const std::vector<CellValue>& b) {
  return !row_less(a, b) && !row_less(b, a);
}

std::vector<std::vector<CellValue>> distinct_sorted(std::vector<std::vector<CellValue>> rows) {
  std::sort(rows.begin(), rows.end(), row_less);
  rows.erase(std::unique(rows.begin(), rows.end(), row_equal), rows.end());
  return rows;
}

}  // namespace

EvalExecution execute_for_eval(Connection& conn, std::string_view sql, std::chrono::milliseconds timeout,
                               std::size_t ceiling) {
  StatementRun run = run_statement(conn, sql, timeout, ceiling, ceiling);
  if (run.status != StatementRun::Status::ok) return EvalError{run.message};
  ResultSet rs;
  rs.column_count = run.column_names.size();
  rs.rows = std::move(run.rows);
  return rs;
}

bool execution_match(const ResultSet& pred, const ResultSet& gold) {
  if (pred.column_count != gold.column_count) return false;
  auto p = distinct_sorted(pred.rows);
  auto g = distinct_sorted(gold.rows);
  if (p.size() != g.size()) return false;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (!row_equal(p[i], g[i])) return false;
  return true;
}

EvalRecord make_eval_record(std::string question_id, Difficulty stratum, std::vector<CandidateFlag> flags) {
  EvalRecord r;
  r.question_id = std::move(question_id);
  r.stratum = stratum;
  r.candidates = std::move(flags);
  for (const auto& f : r.candidates) {
    if (f.match && (!r.first_correct_round || f.round < *r.first_correct_round)) r.first_correct_round = f.round;
  }
  return r;
}

EvalRecord evaluate_candidates(const Question& q, const std::vector<SqlCandidate>& candidates, Connection& conn,
                               std::chrono::milliseconds timeout) {
  std::optional<ResultSet> gold;
  std::optional<std::string> gold_error;
  if (!q.gold_sql || q.gold_sql->empty()) {
    gold_error = "no gold SQL";
  } else {
    auto g = execute_for_eval(conn, *q.gold_sql, timeout);
    if (auto* rs = std::get_if<ResultSet>(&g)) {
      gold = std::move(*rs);
    } else {
      gold_error = std::get<EvalError>(g).message;
    }
  }

  std::map<std::string, bool> verdicts;  // identical SQL strings score identically
  std::vector<CandidateFlag> flags;
  for (const auto& c : candidates) {
    CandidateFlag f{c.backend_id, c.round, c.postprocessed, false};
    if (gold && !c.sql.empty()) {
      auto it = verdicts.find(c.sql);
      if (it == verdicts.end()) {
        auto pred = execute_for_eval(conn, c.sql, timeout);
        const auto* rs = std::get_if<ResultSet>(&pred);
        it = verdicts.emplace(c.sql, rs && execution_match(*rs, *gold)).first;
      }
      f.match = it->second;
    }
    flags.push_back(std::move(f));
  }
  EvalRecord r = make_eval_record(q.id, q.difficulty, std::move(flags));
  r.gold_error = std::move(gold_error);
  return r;
}

double best_of_n(const std::vector<EvalRecord>& records, int n) {
  if (records.empty()) return 0.0;
  auto solved = std::count_if(records.begin(), records.end(), [n](const EvalRecord& r) {
    return r.first_correct_round && *r.first_correct_round <= n;
  });
  return static_cast<double>(solved) / static_cast<double>(records.size());
}

double execution_accuracy(const std::vector<EvalRecord>& records, const std::string& backend_id, bool postprocessed) {
  if (records.empty()) return 0.0;
  auto solved = std::count_if(records.begin(), records.end(), [&](const EvalRecord& r) {
    auto slot = [&](bool pp) -> std::optional<bool> {
      for (const auto& f : r.candidates)
        if (f.round == 1 && f.backend_id == backend_id && f.postprocessed == pp) return f.match;
      return std::nullopt;
    };
    auto hit = slot(postprocessed);
    // A rewrite that fell back leaves only the original candidate.
    if (!hit && postprocessed) hit = slot(false);
    return hit.value_or(false);
  });
  return static_cast<double>(solved) / static_cast<double>(records.size());
}

}  // namespace raisesql
