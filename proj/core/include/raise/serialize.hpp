#pragma once

#include <nlohmann/json.hpp>

#include "raise/evaluation.hpp"
#include "raise/scaling.hpp"
#include "raise/types.hpp"

namespace raisesql {

inline constexpr int kFormatVersion = 1;

void to_json(nlohmann::json& j, const ToolCall& c);
void from_json(const nlohmann::json& j, ToolCall& c);
void to_json(nlohmann::json& j, const OperationRecord& r);
void from_json(const nlohmann::json& j, OperationRecord& r);
void to_json(nlohmann::json& j, const ExplorationTrace& t);
void from_json(const nlohmann::json& j, ExplorationTrace& t);
void to_json(nlohmann::json& j, const ExecOutcome& o);
void from_json(const nlohmann::json& j, ExecOutcome& o);
void to_json(nlohmann::json& j, const SqlCandidate& c);
void from_json(const nlohmann::json& j, SqlCandidate& c);
void to_json(nlohmann::json& j, const CandidateFlag& f);
void from_json(const nlohmann::json& j, CandidateFlag& f);
void to_json(nlohmann::json& j, const EvalRecord& r);
void from_json(const nlohmann::json& j, EvalRecord& r);
void to_json(nlohmann::json& j, const Question& q);
void to_json(nlohmann::json& j, const ScalingPoint& p);

}  // namespace raisesql
