#include "raise/prompts.hpp"

#include <fstream>
#include <sstream>

namespace raisesql {
namespace {

namespace defaults {
#include "raise/prompts_default.inc"
}  // namespace defaults

void override_from(const std::filesystem::path& dir, const char* name, std::string& target) {
  std::ifstream in(dir / (std::string(name) + ".txt"), std::ios::binary);
  if (!in) return;
  std::ostringstream ss;
  ss << in.rdbuf();
  target = ss.str();
}

}  // namespace

PromptSet PromptSet::defaults() {
  return PromptSet{std::string(defaults::k_interaction_agent), std::string(defaults::k_static_agent),
                   std::string(defaults::k_final_generation), std::string(defaults::k_column_postprocess)};
}

PromptSet PromptSet::load(const std::optional<std::filesystem::path>& dir) {
  PromptSet set = defaults();
  if (!dir) return set;
  override_from(*dir, "interaction_agent", set.interaction_agent);
  override_from(*dir, "static_agent", set.static_agent);
  override_from(*dir, "final_generation", set.final_generation);
  override_from(*dir, "column_postprocess", set.column_postprocess);
  return set;
}

std::string render_template(std::string_view tpl, const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t pos = 0;
  while (pos < tpl.size()) {
    auto open = tpl.find('{', pos);
    if (open == std::string_view::npos) break;
    auto close = tpl.find('}', open + 1);
    if (close == std::string_view::npos) break;
    out.append(tpl.substr(pos, open - pos));
    auto it = vars.find(std::string(tpl.substr(open + 1, close - open - 1)));
    if (it != vars.end()) {
      out += it->second;
      pos = close + 1;
    } else {
      out += '{';
      pos = open + 1;
    }
  }
  out.append(tpl.substr(pos));
  return out;
}

}  // namespace raisesql
