#include "raise/scaling.hpp"

#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "raise/evaluation.hpp"

namespace raisesql {

std::vector<ScalingPoint> run_scaling_experiment(const std::vector<Question>& questions, const TraceSource& traces,
                                                 const ConnectionSource& connections, Backend& backend,
                                                 const ScalingOptions& opts, const PromptSet& prompts) {
  std::vector<ScalingPoint> points;
  std::map<std::string, Connection> conns;
  std::map<std::string, std::optional<ResultSet>> gold;
  auto conn_for = [&](const Question& q) -> Connection& {
    auto it = conns.find(q.id);
    if (it == conns.end()) it = conns.emplace(q.id, connections(q)).first;
    return it->second;
  };
  auto gold_for = [&](const Question& q) -> const std::optional<ResultSet>& {
    auto it = gold.find(q.id);
    if (it != gold.end()) return it->second;
    std::optional<ResultSet> rs;
    if (q.gold_sql) {
      auto g = execute_for_eval(conn_for(q), *q.gold_sql, opts.generation.timeout);
      if (auto* r = std::get_if<ResultSet>(&g)) {
        rs = std::move(*r);
      } else {
        spdlog::warn("question {}: gold SQL failed: {}", q.id, std::get<EvalError>(g).message);
      }
    }
    return gold.emplace(q.id, std::move(rs)).first->second;
  };

  for (AgentKind kind : opts.agent_kinds) {
    // One exploration per question and agent kind, shared by every depth.
    std::vector<std::optional<ExplorationTrace>> per_question;
    per_question.reserve(questions.size());
    for (const auto& q : questions) {
      per_question.push_back(traces(q, kind));
      if (!per_question.back()) spdlog::warn("question {}: no {} trace; excluded", q.id, to_string(kind));
    }
    for (std::size_t k : opts.ks) {
      for (bool refine : opts.refinement) {
        ScalingPoint point{k, kind, refine, 0.0, 0, 0};
        for (std::size_t i = 0; i < questions.size(); ++i) {
          if (!per_question[i]) continue;
          const Question& q = questions[i];
          ++point.questions;
          Connection& conn = conn_for(q);
          GenerationPrompt prompt = build_generation_prompt(q, *per_question[i], k);
          SqlCandidate cand = refine ? refine_sql(prompt, backend, conn, prompts, opts.generation).final
                                     : generate_sql(prompt, backend, conn, prompts, opts.generation);
          const auto& g = gold_for(q);
          if (!g || cand.sql.empty()) continue;
          auto pred = execute_for_eval(conn, cand.sql, opts.generation.timeout);
          if (const auto* rs = std::get_if<ResultSet>(&pred); rs && execution_match(*rs, *g)) ++point.correct;
        }
        point.execution_accuracy =
            point.questions ? static_cast<double>(point.correct) / static_cast<double>(point.questions) : 0.0;
        points.push_back(point);
      }
    }
  }
  return points;
}

std::string scaling_csv(const std::vector<ScalingPoint>& points) {
  std::string out = "configuration,k,ex,correct,questions\n";
  for (const auto& p : points) {
    out += fmt::format("{}{},{},{:.6f},{},{}\n", to_string(p.agent_kind), p.refinement_enabled ? "+refine" : "", p.k,
                       p.execution_accuracy, p.correct, p.questions);
  }
  return out;
}

}  // namespace raisesql
