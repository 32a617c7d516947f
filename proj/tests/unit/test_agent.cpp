#include <gtest/gtest.h>

#include "raise/agent.hpp"
#include "raise/error.hpp"
#include "raise/protocol.hpp"
#include "raise_tools/fixtures.hpp"
#include "test_support.hpp"

using namespace raisesql;
using raisesql::testing::TempDir;

namespace {

TapeEntry fifo(std::string text, std::optional<std::int64_t> tokens = std::nullopt) {
  return TapeEntry{std::move(text), {}, false, tokens};
}

std::size_t count(const std::string& hay, std::string_view needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

// Independent model of the control policy.
struct ControlOracle {
  std::int64_t total = 0, since = 0;
  bool done = false;
  ControlAction step(std::int64_t tokens, bool tool) {
    total += tokens;
    since = tool ? 0 : since + tokens;
    if (done) return ControlAction::none;
    if (total > 10000) {
      done = true;
      return ControlAction::inject_terminator;
    }
    return since > 1400 ? ControlAction::inject_nudge : ControlAction::none;
  }
};

}  // namespace

class AgentTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fixtures::build_pets_db(dir_ / "pets.sqlite");
    fixtures::write_pets_docs(dir_ / "docs");
    cat_ = attach_database(dir_ / "pets.sqlite", dir_ / "docs");
    conn_ = std::make_unique<Connection>(dir_ / "pets.sqlite");
  }
  ExplorationTrace run(std::vector<TapeEntry> tape, AgentConfig cfg = {}) {
    backend_ = std::make_unique<ScriptedBackend>("agent", std::move(tape));
    return run_agent(q_, cat_, *conn_, *backend_, cfg);
  }
  TempDir dir_;
  DbCatalog cat_;
  std::unique_ptr<Connection> conn_;
  std::unique_ptr<ScriptedBackend> backend_;
  Question q_{"q1", "pets", "How many dogs are there?", "dog refers to species = 'dog'", std::nullopt,
              Difficulty::simple};
};

TEST(Control, Config) {
  AgentConfig c;
  EXPECT_NO_THROW(c.validate());
  c.no_tool_token_cap = 10'000;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Control, MatchesOracleOnRandomSequences) {
  std::mt19937_64 rng(99);
  AgentConfig cfg;
  for (int run = 0; run < 300; ++run) {
    BudgetState b;
    ControlOracle o;
    for (int i = 0; i < 80; ++i) {
      std::int64_t t = static_cast<std::int64_t>(rng() % 2500);
      bool tool = rng() % 4 == 0;
      ASSERT_EQ(apply_control(b, cfg, {t, tool}), o.step(t, tool));
      ASSERT_EQ(b.tokens_total, o.total);
    }
  }
}

TEST(Control, TerminatorTakesPrecedenceAndFiresOnce) {
  AgentConfig cfg;
  BudgetState b;
  EXPECT_EQ(apply_control(b, cfg, {10'001, false}), ControlAction::inject_terminator);
  EXPECT_TRUE(b.terminated);
  EXPECT_EQ(apply_control(b, cfg, {5000, false}), ControlAction::none);
  BudgetState c;
  EXPECT_EQ(apply_control(c, cfg, {1400, false}), ControlAction::none);
  EXPECT_EQ(apply_control(c, cfg, {1, false}), ControlAction::inject_nudge);
  EXPECT_EQ(apply_control(c, cfg, {1, false}), ControlAction::inject_nudge);
  EXPECT_EQ(apply_control(c, cfg, {1, true}), ControlAction::none);
}

TEST_F(AgentTest, ExploresAndStopsNaturally) {
  auto trace = run({fifo(" Looking.\n[RUN] read_table_names() [EXECUTE]"),
                    fifo(" Columns.\n[RUN] read_table_columns(pet) [EXECUTE]"),
                    fifo(" [RUN] run_query(SELECT COUNT(*) FROM pet WHERE species = 'dog') [EXECUTE]"),
                    fifo(" Done.\n```sql\nSELECT COUNT(*) FROM pet WHERE species = 'dog'\n```")});
  EXPECT_EQ(trace.termination, Termination::natural);
  ASSERT_EQ(trace.operations.size(), 3u);
  EXPECT_EQ(trace.operations[0].call, ToolCall::table_names());
  EXPECT_EQ(trace.operations[0].rendered_result, "owner\npet");
  EXPECT_EQ(trace.operations[2].row_count, 1);
  EXPECT_EQ(trace.operations[2].index, 2u);
  EXPECT_TRUE(trace.raw_transcript.rfind(std::string(kReasoningPrefix), 0) == 0);
  EXPECT_NE(trace.raw_transcript.find("[EXECUTE]\n[RESULT]\nowner\npet\n[/RESULT]\n"), std::string::npos);
  EXPECT_EQ(extract_final_sql(trace.raw_transcript), "SELECT COUNT(*) FROM pet WHERE species = 'dog'");

  // Every request continues the transcript and stops at the execute tag.
  auto reqs = backend_->requests();
  ASSERT_EQ(reqs.size(), 4u);
  EXPECT_EQ(reqs[0].stop_sequences, std::vector<std::string>{"[EXECUTE]"});
  EXPECT_EQ(reqs[0].prefill, std::string(kReasoningPrefix));
  EXPECT_NE(reqs[0].messages[0].content.find("How many dogs are there?"), std::string::npos);
  EXPECT_NE(reqs[0].messages[0].content.find("run_query(sql: str)"), std::string::npos);
  EXPECT_NE(reqs[3].prefill->find("species = 'dog'"), std::string::npos);
}

TEST_F(AgentTest, ToolErrorsAreOperationsAndMalformedCallsAreNot) {
  auto trace = run({fifo("[RUN] run_query(SELECT nope FROM pet) [EXECUTE]"), fifo("[RUN] fly_away() [EXECUTE]"),
                    fifo("[RUN] run_query(DELETE FROM pet) [EXECUTE]"), fifo("finished")});
  ASSERT_EQ(trace.operations.size(), 2u);
  EXPECT_FALSE(trace.operations[0].ok());
  EXPECT_EQ(trace.operations[1].error, "read-only: statement rejected");
  EXPECT_NE(trace.raw_transcript.find("could not parse command: unknown tool fly_away"), std::string::npos);
}

TEST_F(AgentTest, StaticAgentNeverRunsQueries) {
  AgentConfig cfg;
  cfg.agent_kind = AgentKind::static_schema;
  auto trace = run({fifo("[RUN] run_query(SELECT 1) [EXECUTE]"), fifo("[RUN] read_table_names() [EXECUTE]"),
                    fifo("```sql\nSELECT 1\n```")},
                   cfg);
  EXPECT_EQ(trace.agent_kind, AgentKind::static_schema);
  ASSERT_EQ(trace.operations.size(), 1u);
  EXPECT_EQ(trace.operations[0].call.tool, Tool::read_table_names);
  EXPECT_NE(trace.raw_transcript.find("[RESULT]\nrun_query is not available\n[/RESULT]"), std::string::npos);
  EXPECT_EQ(backend_->requests()[0].messages[0].content.find("run_query(sql"), std::string::npos);
}

TEST_F(AgentTest, NudgesThenTerminates) {
  // Never calls a tool and never stops on its own.
  auto trace = run({TapeEntry{"word", {}, true, 1'000'000}});
  // Chunk boundaries at 1401, 2801, ..., 9801 nudge; 10001 terminates.
  EXPECT_EQ(count(trace.raw_transcript, kNudgeText), 7u);
  EXPECT_EQ(count(trace.raw_transcript, kTerminateText), 1u);
  EXPECT_EQ(trace.termination, Termination::forced_budget);
  auto reqs = backend_->requests();
  ASSERT_EQ(reqs.size(), 9u);
  EXPECT_EQ(reqs[0].max_tokens, 1401);
  EXPECT_EQ(reqs[1].max_tokens, 1400);
  EXPECT_EQ(reqs[7].max_tokens, 200);
  EXPECT_TRUE(reqs[8].stop_sequences.empty());
  EXPECT_EQ(reqs[8].max_tokens, 2048);
  EXPECT_EQ(trace.tokens_generated, 10'001 + 2048);
}

TEST_F(AgentTest, ToolUseResetsTheNudgeWindow) {
  std::string words;
  for (int i = 0; i < 700; ++i) words += "w ";
  // About 914 tokens per turn: two turns without the reset would cross 1400.
  auto trace = run({fifo(words + "[RUN] read_table_names() [EXECUTE]"), fifo(words + "[RUN] read_table_names() [EXECUTE]"),
                    fifo("done")});
  EXPECT_GT(trace.tokens_generated, 1800);
  EXPECT_EQ(count(trace.raw_transcript, kNudgeText), 0u);
  EXPECT_EQ(trace.termination, Termination::natural);
}

TEST_F(AgentTest, OperationCap) {
  AgentConfig cfg;
  cfg.max_operations = 3;
  auto trace = run({TapeEntry{"```sql\nSELECT 1\n```", {std::string(kTerminateText)}, false, std::nullopt},
                    TapeEntry{"[RUN] read_table_names() [EXECUTE]", {"[RESULT]"}, true, std::nullopt},
                    fifo("[RUN] read_table_names() [EXECUTE]")},
                   cfg);
  EXPECT_EQ(trace.operations.size(), 3u);
  EXPECT_EQ(extract_final_sql(trace.raw_transcript), "SELECT 1");
  EXPECT_EQ(trace.termination, Termination::operation_cap);
  EXPECT_EQ(count(trace.raw_transcript, kTerminateText), 1u);
}

TEST_F(AgentTest, BackendErrorEndsTheRun) {
  auto trace = run({fifo("[RUN] read_table_names() [EXECUTE]")});
  EXPECT_EQ(trace.termination, Termination::backend_error);
  EXPECT_NE(trace.error.find("exhausted"), std::string::npos);
  EXPECT_EQ(trace.operations.size(), 1u);
}

TEST_F(AgentTest, HardBudgetHoldsForRandomTapes) {
  std::mt19937_64 rng(1);
  const std::vector<std::string> moves = {"[RUN] read_table_names() [EXECUTE]", "[RUN] run_query(SELECT 1) [EXECUTE]",
                                          "thinking aloud", "[RUN] bad( [EXECUTE]"};
  for (int run_no = 0; run_no < 50; ++run_no) {
    std::vector<TapeEntry> tape;
    for (int i = 0; i < 80; ++i) {
      auto tokens = static_cast<std::int64_t>(rng() % 3000);
      tape.push_back(fifo(moves[rng() % moves.size()], tokens + 1));
    }
    tape.push_back(fifo("end"));
    AgentConfig cfg;
    auto trace = run(tape, cfg);
    EXPECT_LE(trace.tokens_generated, cfg.total_token_cap + kMinChunkTokens + cfg.final_answer_tokens);
    EXPECT_LE(trace.operations.size(), cfg.max_operations);
  }
}
