#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "raise/evaluation.hpp"
#include "raise_tools/fixtures.hpp"
#include "test_support.hpp"

using namespace raisesql;
using raisesql::testing::TempDir;

namespace {

using Row = std::vector<CellValue>;

// Quadratic set comparison: every row of each side occurs in the other.
bool brute_force_match(const ResultSet& p, const ResultSet& g) {
  if (p.column_count != g.column_count) return false;
  auto covered = [](const std::vector<Row>& from, const std::vector<Row>& in) {
    for (const auto& r : from) {
      bool found = false;
      for (const auto& s : in) {
        bool same = r.size() == s.size();
        for (std::size_t i = 0; same && i < r.size(); ++i) same = cells_match(r[i], s[i]);
        if (same) {
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
    return true;
  };
  return covered(p.rows, g.rows) && covered(g.rows, p.rows);
}

CellValue random_cell(std::mt19937_64& rng) {
  switch (rng() % 7) {
    case 0: return CellValue::null();
    case 1: return CellValue::integer(static_cast<std::int64_t>(rng() % 3));
    case 2: return CellValue::real(static_cast<double>(rng() % 3));  // equal to the integers
    case 3: return CellValue::real(0.1 + 0.2);
    case 4: return CellValue::real(0.3);
    case 5: return CellValue::text(rng() % 2 ? "a" : "b");
    default: return CellValue::blob({static_cast<std::uint8_t>(rng() % 2)});
  }
}

ResultSet random_set(std::mt19937_64& rng, std::size_t cols) {
  ResultSet rs{cols, {}};
  for (std::size_t r = 0, n = rng() % 6; r < n; ++r) {
    Row row;
    for (std::size_t c = 0; c < cols; ++c) row.push_back(random_cell(rng));
    rs.rows.push_back(row);
  }
  return rs;
}

}  // namespace

TEST(ExecutionMatch, Basics) {
  ResultSet g{2, {{CellValue::integer(1), CellValue::text("x")}, {CellValue::integer(2), CellValue::text("y")}}};
  ResultSet reordered{2, {g.rows[1], g.rows[0], g.rows[1]}};
  EXPECT_TRUE(execution_match(reordered, g));
  ResultSet swapped{2, {{CellValue::text("x"), CellValue::integer(1)}, {CellValue::text("y"), CellValue::integer(2)}}};
  EXPECT_FALSE(execution_match(swapped, g));
  ResultSet wider{3, {}};
  EXPECT_FALSE(execution_match(wider, ResultSet{2, {}}));
  EXPECT_TRUE(execution_match(ResultSet{1, {}}, ResultSet{1, {}}));
  EXPECT_TRUE(execution_match(ResultSet{1, {{CellValue::real(3.0)}}}, ResultSet{1, {{CellValue::integer(3)}}}));
  EXPECT_TRUE(execution_match(ResultSet{1, {{CellValue::real(0.1 + 0.2)}}}, ResultSet{1, {{CellValue::real(0.3)}}}));
  EXPECT_TRUE(execution_match(ResultSet{1, {{CellValue::null()}}}, ResultSet{1, {{CellValue::null()}}}));
  EXPECT_FALSE(execution_match(ResultSet{1, {{CellValue::text("1")}}}, ResultSet{1, {{CellValue::integer(1)}}}));
}

TEST(ExecutionMatch, AgreesWithBruteForce) {
  std::mt19937_64 rng(2024);
  int positives = 0;
  for (int n = 0; n < 3000; ++n) {
    std::size_t cols = 1 + rng() % 3;
    ResultSet g = random_set(rng, cols);
    ResultSet p;
    switch (n % 4) {
      case 0: {  // row permutation with duplicates
        p = g;
        if (!g.rows.empty()) p.rows.push_back(g.rows[rng() % g.rows.size()]);
        std::shuffle(p.rows.begin(), p.rows.end(), rng);
        break;
      }
      case 1: {  // column permutation
        p = g;
        std::vector<std::size_t> perm(cols);
        for (std::size_t i = 0; i < cols; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), rng);
        for (auto& row : p.rows) {
          Row out;
          for (auto i : perm) out.push_back(row[i]);
          row = out;
        }
        break;
      }
      case 2: {  // one cell changed
        p = g;
        if (!p.rows.empty()) p.rows[rng() % p.rows.size()][rng() % cols] = random_cell(rng);
        break;
      }
      default: p = random_set(rng, rng() % 4 == 0 ? cols + 1 : cols);
    }
    bool expected = brute_force_match(p, g);
    positives += expected;
    ASSERT_EQ(execution_match(p, g), expected) << "case " << n;
    ASSERT_EQ(execution_match(g, p), expected) << "case " << n;
  }
  EXPECT_GT(positives, 500);
  EXPECT_LT(positives, 2500);
}

TEST(EvalRecord, FirstCorrectRound) {
  auto r = make_eval_record("q", Difficulty::simple,
                            {{"a", 1, false, false}, {"b", 2, false, false}, {"a", 3, false, true}, {"b", 2, true, true}});
  EXPECT_EQ(r.first_correct_round, 2);
  EXPECT_FALSE(make_eval_record("q", Difficulty::simple, {{"a", 1, false, false}}).first_correct_round);
  EXPECT_FALSE(make_eval_record("q", Difficulty::simple, {}).first_correct_round);
}

TEST(BestOfN, CountsFirstCorrectRound) {
  std::vector<EvalRecord> rs;
  rs.push_back(make_eval_record("1", Difficulty::simple, {{"a", 1, false, true}}));
  rs.push_back(make_eval_record("2", Difficulty::simple, {{"a", 1, false, false}, {"a", 2, false, true}}));
  rs.push_back(make_eval_record("3", Difficulty::simple, {{"a", 1, false, false}, {"a", 2, false, false}}));
  rs.push_back(make_eval_record("4", Difficulty::simple, {{"a", 3, false, true}}));
  EXPECT_DOUBLE_EQ(best_of_n(rs, 0), 0.0);
  EXPECT_DOUBLE_EQ(best_of_n(rs, 1), 0.25);
  EXPECT_DOUBLE_EQ(best_of_n(rs, 2), 0.5);
  EXPECT_DOUBLE_EQ(best_of_n(rs, 3), 0.75);
  EXPECT_DOUBLE_EQ(best_of_n(rs, 100), 0.75);
  EXPECT_DOUBLE_EQ(best_of_n({}, 3), 0.0);
}

TEST(BestOfN, MonotoneInN) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EvalRecord> rs;
    for (int q = 0, n = 1 + static_cast<int>(rng() % 20); q < n; ++q) {
      std::vector<CandidateFlag> flags;
      for (int round = 1; round <= 8; ++round) flags.push_back({"a", round, false, rng() % 5 == 0});
      rs.push_back(make_eval_record(std::to_string(q), Difficulty::simple, flags));
    }
    for (int n = 1; n < 10; ++n) ASSERT_LE(best_of_n(rs, n), best_of_n(rs, n + 1));
  }
}

TEST(ExecutionAccuracy, PerConfiguration) {
  std::vector<EvalRecord> rs;
  rs.push_back(make_eval_record("1", Difficulty::simple, {{"a", 1, false, false}, {"a", 1, true, true}}));
  rs.push_back(make_eval_record("2", Difficulty::simple, {{"a", 1, false, true}, {"a", 1, true, false}}));
  // The rewrite fell back: the configuration returned the original candidate.
  rs.push_back(make_eval_record("3", Difficulty::simple, {{"a", 1, false, true}}));
  rs.push_back(make_eval_record("4", Difficulty::simple, {{"a", 2, false, true}}));
  EXPECT_DOUBLE_EQ(execution_accuracy(rs, "a", false), 0.5);
  EXPECT_DOUBLE_EQ(execution_accuracy(rs, "a", true), 0.5);
  EXPECT_DOUBLE_EQ(execution_accuracy(rs, "b", false), 0.0);
  EXPECT_DOUBLE_EQ(execution_accuracy({}, "a", false), 0.0);
}

class EvalDbTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fixtures::build_pets_db(dir_ / "pets.sqlite");
    conn_.emplace(dir_ / "pets.sqlite");
  }
  TempDir dir_;
  std::optional<Connection> conn_;
};

TEST_F(EvalDbTest, ExecutesAndCanonicalizes) {
  auto r = execute_for_eval(*conn_, "SELECT weight FROM pet ORDER BY pet_id");
  ASSERT_TRUE(std::holds_alternative<ResultSet>(r));
  auto& rs = std::get<ResultSet>(r);
  EXPECT_EQ(rs.column_count, 1u);
  ASSERT_EQ(rs.rows.size(), 3u);
  EXPECT_TRUE(rs.rows[2][0].is_null());
  EXPECT_TRUE(std::holds_alternative<EvalError>(execute_for_eval(*conn_, "SELECT nope FROM pet")));
  EXPECT_TRUE(std::holds_alternative<EvalError>(execute_for_eval(*conn_, "DELETE FROM pet")));
  auto capped = execute_for_eval(*conn_, "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT x FROM c",
                                 std::chrono::seconds(10), 50);
  EXPECT_TRUE(std::holds_alternative<EvalError>(capped));
}

TEST_F(EvalDbTest, ScoresCandidates) {
  Question q{"q1", "pets", "Names of dogs and cats", "", "SELECT name FROM pet WHERE species IN ('dog', 'cat')",
             Difficulty::moderate};
  std::vector<SqlCandidate> cs{
      {"SELECT name FROM pet WHERE species != 'fish' ORDER BY name DESC", "a", 1, false, {}},
      {"SELECT name, species FROM pet WHERE species != 'fish'", "a", 1, true, {}},
      {"SELECT name FROM pet", "b", 2, false, {}},
      {"", "b", 2, true, {}},
      {"SELECT broken FROM pet", "c", 2, false, {}},
      {"SELECT name FROM pet WHERE species IN ('cat', 'dog')", "c", 3, false, {}},
  };
  auto r = evaluate_candidates(q, cs, *conn_);
  EXPECT_EQ(r.question_id, "q1");
  EXPECT_EQ(r.stratum, Difficulty::moderate);
  ASSERT_EQ(r.candidates.size(), 6u);
  std::vector<bool> got;
  for (const auto& f : r.candidates) got.push_back(f.match);
  EXPECT_EQ(got, (std::vector<bool>{true, false, false, false, false, true}));
  EXPECT_EQ(r.candidates[1].postprocessed, true);
  EXPECT_EQ(r.first_correct_round, 1);
  EXPECT_FALSE(r.gold_error);
}

TEST_F(EvalDbTest, GoldFailureMarksEverythingWrong) {
  Question q{"q2", "pets", "?", "", "SELECT nothing FROM nowhere", Difficulty::simple};
  std::vector<SqlCandidate> cs{{"SELECT 1", "a", 1, false, {}}};
  auto r = evaluate_candidates(q, cs, *conn_);
  ASSERT_TRUE(r.gold_error);
  EXPECT_FALSE(r.candidates[0].match);
  EXPECT_FALSE(r.first_correct_round);

  q.gold_sql.reset();
  EXPECT_EQ(evaluate_candidates(q, cs, *conn_).gold_error, "no gold SQL");
}
