#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace raisesql {

/// Prompt templates. Placeholders are written {name}; unknown placeholders
/// are left as they are.
struct PromptSet {
  std::string interaction_agent;
  std::string static_agent;
  std::string final_generation;
  std::string column_postprocess;

  static PromptSet defaults();
  /// Overrides defaults with interaction_agent.txt, static_agent.txt,
  /// final_generation.txt and column_postprocess.txt where present.
  static PromptSet load(const std::optional<std::filesystem::path>& dir);
};

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars);

}  // namespace raisesql
