#include <gtest/gtest.h>

#include "raise/protocol.hpp"
#include "raise/scaling.hpp"
#include "raise_tools/fixtures.hpp"
#include "test_support.hpp"

using namespace raisesql;
using raisesql::testing::TempDir;

namespace {

ExplorationTrace nine_ops(const std::string& qid) {
  ExplorationTrace t;
  t.question_id = qid;
  for (std::size_t i = 0; i < 9; ++i) {
    OperationRecord op;
    op.index = i;
    op.call = ToolCall::query("SELECT " + std::to_string(100 + i));
    op.rendered_result = "probe " + std::to_string(i);
    t.operations.push_back(op);
  }
  return t;
}

std::size_t ops_in(const CompletionRequest& r) {
  std::size_t n = 0;
  auto body = r.flattened();
  for (std::size_t i = 0; i < 9; ++i) n += body.find("probe " + std::to_string(i)) != std::string::npos;
  return n;
}

class ScalingTest : public ::testing::Test {
 protected:
  void SetUp() override {
    fixtures::build_pets_db(dir_ / "pets.sqlite");
    qs_ = {{"heavy", "pets", "Heaviest pet?", "", "SELECT name FROM pet ORDER BY weight DESC LIMIT 1",
            Difficulty::simple},
           {"count", "pets", "How many pets?", "", "SELECT COUNT(*) FROM pet", Difficulty::simple},
           {"ghost", "pets", "Untraced?", "", "SELECT 1", Difficulty::simple}};
  }
  ConnectionSource conns() {
    return [this](const Question&) { return Connection(dir_ / "pets.sqlite"); };
  }
  TempDir dir_;
  std::vector<Question> qs_;
};

}  // namespace

TEST_F(ScalingTest, DepthCurve) {
  // "count" is always right; "heavy" only once probe 5 is in the prompt.
  ScriptedBackend b("gen", {
                               {"```sql\nSELECT COUNT(*) FROM pet\n```", {"How many pets?"}, true, std::nullopt},
                               {"```sql\nSELECT name FROM pet ORDER BY weight DESC LIMIT 1\n```",
                                {"Heaviest pet?", "probe 5"}, true, std::nullopt},
                               {"```sql\nSELECT name FROM pet LIMIT 1 OFFSET 1\n```", {"Heaviest pet?"}, true,
                                std::nullopt},
                           });
  int fetches = 0;
  TraceSource traces = [&](const Question& q, AgentKind) -> std::optional<ExplorationTrace> {
    ++fetches;
    if (q.id == "ghost") return std::nullopt;
    return nine_ops(q.id);
  };
  ScalingOptions opts;
  opts.agent_kinds = {AgentKind::interaction};
  opts.ks = {0, 3, 7, 9, 15, 31};
  opts.refinement = {false};
  auto points = run_scaling_experiment(qs_, traces, conns(), b, opts);

  EXPECT_EQ(fetches, 3);  // once per question, whatever the number of depths
  ASSERT_EQ(points.size(), 6u);
  std::vector<std::size_t> correct;
  for (const auto& p : points) {
    EXPECT_EQ(p.questions, 2u);
    EXPECT_FALSE(p.refinement_enabled);
    correct.push_back(p.correct);
  }
  EXPECT_EQ(correct, (std::vector<std::size_t>{1, 1, 2, 2, 2, 2}));
  EXPECT_DOUBLE_EQ(points[2].execution_accuracy, 1.0);
  EXPECT_EQ(points[4].execution_accuracy, points[5].execution_accuracy);

  // Prompts carry min(k, 9) operations, always a prefix.
  auto reqs = b.requests();
  ASSERT_EQ(reqs.size(), 12u);
  const std::size_t ks[] = {0, 3, 7, 9, 15, 31};
  for (std::size_t i = 0; i < reqs.size(); ++i) EXPECT_EQ(ops_in(reqs[i]), std::min<std::size_t>(ks[i / 2], 9));
}

TEST_F(ScalingTest, RefinementAndCsv) {
  // The first answer fails to execute; with refinement the retry is correct.
  ScriptedBackend b("gen", {
                               {"```sql\nSELECT COUNT(*) FROM pet\n```", {"How many pets?", "Attempt 1"}, true,
                                std::nullopt},
                               {"```sql\nSELECT COUNT(nope) FROM pet\n```", {"How many pets?"}, true, std::nullopt},
                           });
  TraceSource traces = [](const Question& q, AgentKind) -> std::optional<ExplorationTrace> { return nine_ops(q.id); };
  ScalingOptions opts;
  opts.agent_kinds = {AgentKind::interaction, AgentKind::static_schema};
  opts.ks = {3};
  std::vector<Question> one{qs_[1]};
  auto points = run_scaling_experiment(one, traces, conns(), b, opts);
  ASSERT_EQ(points.size(), 4u);
  EXPECT_EQ(points[0].correct, 0u);
  EXPECT_EQ(points[1].correct, 1u);
  EXPECT_EQ(points[2].agent_kind, AgentKind::static_schema);
  EXPECT_EQ(scaling_csv(points),
            "configuration,k,ex,correct,questions\n"
            "interaction,3,0.000000,0,1\n"
            "interaction+refine,3,1.000000,1,1\n"
            "static,3,0.000000,0,1\n"
            "static+refine,3,1.000000,1,1\n");
}
