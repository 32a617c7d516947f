#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raise/agent.hpp"
#include "raise/backend.hpp"
#include "raise/generation.hpp"
#include "raise/sandbox.hpp"

namespace raisesql {

struct BackendConfig {
  std::string name;
  std::string type;  // "http" or "scripted"
  // http
  std::string base_url;
  std::string model;
  bool supports_prefill = false;
  double timeout_s = 120;
  int max_retries = 3;
  double backoff_s = 1.0;
  // scripted
  std::optional<std::filesystem::path> tape;
};

struct GeneratorConfig {
  std::string backend;
  bool postprocess = false;
};

/// Declarative run configuration. Relative paths resolve against the
/// directory of the file they were read from.
struct RunConfig {
  std::optional<std::filesystem::path> dataset;
  std::filesystem::path store = "runs";
  std::optional<std::filesystem::path> prompts_dir;
  std::uint64_t seed = 0;
  double sample_fraction = 1.0;
  std::size_t workers = 1;

  std::string agent_backend;
  std::vector<AgentKind> agent_kinds{AgentKind::interaction};
  std::int64_t no_tool_token_cap = 1400;
  std::int64_t total_token_cap = 10'000;
  std::size_t max_operations = 40;
  std::int64_t final_answer_tokens = 2048;
  double agent_temperature = 0.0;

  ExecLimits limits;

  std::vector<GeneratorConfig> generators;
  std::string postprocess_backend;  // empty: each generator answers for itself
  std::size_t k = 15;
  int rounds = 1;
  bool refinement = true;
  double generation_temperature = 0.0;
  std::int64_t generation_max_tokens = 4096;

  std::string scaling_backend;  // empty: first generator
  std::vector<std::size_t> scaling_ks{0, 3, 7, 15, 31};
  std::vector<bool> scaling_refinement{false, true};

  std::vector<BackendConfig> backends;

  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& file);
  nlohmann::json to_json() const;

  AgentConfig agent_config(AgentKind kind) const;
  GenerationOptions generation_options() const;
  /// Throws ConfigError on inconsistent settings (unknown backend names,
  /// bad caps, fraction outside (0, 1]).
  void validate() const;
};

/// Backends built from a configuration, addressable by name.
class BackendSet {
 public:
  static BackendSet from_config(const RunConfig& cfg);
  void add(std::shared_ptr<Backend> backend);

  Backend& get(const std::string& name) const;  // throws ConfigError
  bool contains(const std::string& name) const { return backends_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<Backend>> backends_;
};

}  // namespace raisesql
