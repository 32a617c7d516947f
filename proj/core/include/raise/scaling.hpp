#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "raise/backend.hpp"
#include "raise/catalog.hpp"
#include "raise/generation.hpp"
#include "raise/sandbox.hpp"
#include "raise/types.hpp"

namespace raisesql {

struct ScalingPoint {
  std::size_t k = 0;
  AgentKind agent_kind = AgentKind::interaction;
  bool refinement_enabled = false;
  double execution_accuracy = 0.0;
  std::size_t questions = 0;  // denominator
  std::size_t correct = 0;
  bool operator==(const ScalingPoint&) const = default;
};

/// Obtains the trace for a question; nullopt when none can be produced.
using TraceSource = std::function<std::optional<ExplorationTrace>(const Question&, AgentKind)>;
/// Opens a fresh connection to the question's database.
using ConnectionSource = std::function<Connection(const Question&)>;

struct ScalingOptions {
  std::vector<AgentKind> agent_kinds{AgentKind::interaction, AgentKind::static_schema};
  std::vector<std::size_t> ks{0, 3, 7, 15, 31};
  std::vector<bool> refinement{false, true};
  GenerationOptions generation;
};

/// Traces are fetched once per (question, agent kind) and reused for every
/// depth. Questions without a trace leave the denominator; generation
/// failures count as incorrect.
std::vector<ScalingPoint> run_scaling_experiment(const std::vector<Question>& questions, const TraceSource& traces,
                                                 const ConnectionSource& connections, Backend& backend,
                                                 const ScalingOptions& opts = {},
                                                 const PromptSet& prompts = PromptSet::defaults());

/// Columns configuration,k,ex,correct,questions; configuration reads like
/// "interaction+refine".
std::string scaling_csv(const std::vector<ScalingPoint>& points);

}  // namespace raisesql
