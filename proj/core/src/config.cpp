#include "raise/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "raise/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace raisesql {
namespace {

// Reads a section while rejecting keys it does not know, so typos surface.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(fmt::format("{} must be an object", label()));
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw ConfigError(fmt::format("{}.{} has the wrong type", label(), key));
    }
  }

  void read_path(const char* key, std::optional<fs::path>& out, const fs::path& base) {
    std::string s;
    read(key, s);
    if (!s.empty()) out = resolve(s, base);
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(fmt::format("unknown key {}.{}", label(), k));
    }
  }

  static fs::path resolve(const std::string& s, const fs::path& base) {
    fs::path p(s);
    return p.is_relative() && !base.empty() ? (base / p).lexically_normal() : p;
  }

 private:
  std::string label() const { return path_.empty() ? "config" : path_; }
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

AgentKind parse_kind(const std::string& s) {
  auto k = agent_kind_from_string(s);
  if (!k) throw ConfigError(fmt::format("unknown agent kind \"{}\"", s));
  return *k;
}

std::string path_string(const std::optional<fs::path>& p) { return p ? p->string() : std::string(); }

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  RunConfig c;
  Section top(j, "");
  top.read_path("dataset", c.dataset, base_dir);
  std::optional<fs::path> store;
  top.read_path("store", store, base_dir);
  c.store = store.value_or(Section::resolve("runs", base_dir));
  top.read_path("prompts_dir", c.prompts_dir, base_dir);
  top.read("seed", c.seed);
  top.read("sample_fraction", c.sample_fraction);
  top.read("workers", c.workers);

  if (const json* a = top.child("agent")) {
    Section s(*a, "agent");
    s.read("backend", c.agent_backend);
    std::vector<std::string> kinds;
    s.read("kinds", kinds);
    if (!kinds.empty()) {
      c.agent_kinds.clear();
      for (const auto& k : kinds) c.agent_kinds.push_back(parse_kind(k));
    }
    s.read("no_tool_token_cap", c.no_tool_token_cap);
    s.read("total_token_cap", c.total_token_cap);
    s.read("max_operations", c.max_operations);
    s.read("final_answer_tokens", c.final_answer_tokens);
    s.read("temperature", c.agent_temperature);
    s.finish();
  }
  if (const json* l = top.child("limits")) {
    Section s(*l, "limits");
    s.read("row_cap", c.limits.row_cap);
    s.read("cell_width", c.limits.cell_width);
    double timeout_s = static_cast<double>(c.limits.timeout.count()) / 1000.0;
    s.read("timeout_s", timeout_s);
    c.limits.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
    s.finish();
  }
  if (const json* g = top.child("generation")) {
    Section s(*g, "generation");
    if (const json* gens = s.child("generators")) {
      if (!gens->is_array()) throw ConfigError("generation.generators must be an array");
      for (const auto& e : *gens) {
        GeneratorConfig gc;
        if (e.is_string()) {
          gc.backend = e.get<std::string>();
        } else {
          Section gs(e, "generation.generators[]");
          gs.read("backend", gc.backend);
          gs.read("postprocess", gc.postprocess);
          gs.finish();
        }
        c.generators.push_back(std::move(gc));
      }
    }
    s.read("postprocess_backend", c.postprocess_backend);
    s.read("k", c.k);
    s.read("rounds", c.rounds);
    s.read("refinement", c.refinement);
    s.read("temperature", c.generation_temperature);
    s.read("max_tokens", c.generation_max_tokens);
    s.finish();
  }
  if (const json* sc = top.child("scaling")) {
    Section s(*sc, "scaling");
    s.read("backend", c.scaling_backend);
    s.read("ks", c.scaling_ks);
    s.read("refinement", c.scaling_refinement);
    s.finish();
  }
  if (const json* bs = top.child("backends")) {
    if (!bs->is_array()) throw ConfigError("backends must be an array");
    for (const auto& e : *bs) {
      BackendConfig b;
      Section s(e, "backends[]");
      s.read("name", b.name);
      s.read("type", b.type);
      s.read("base_url", b.base_url);
      s.read("model", b.model);
      s.read("supports_prefill", b.supports_prefill);
      s.read("timeout_s", b.timeout_s);
      s.read("max_retries", b.max_retries);
      s.read("backoff_s", b.backoff_s);
      s.read_path("tape", b.tape, base_dir);
      s.finish();
      c.backends.push_back(std::move(b));
    }
  }
  top.finish();
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot read config {}", file.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config {} is not valid JSON: {}", file.string(), e.what()));
  }
  return from_json(j, fs::absolute(file).parent_path());
}

json RunConfig::to_json() const {
  json kinds = json::array();
  for (auto k : agent_kinds) kinds.push_back(to_string(k));
  json gens = json::array();
  for (const auto& g : generators) gens.push_back({{"backend", g.backend}, {"postprocess", g.postprocess}});
  json bs = json::array();
  for (const auto& b : backends) {
    json e{{"name", b.name}, {"type", b.type}};
    if (b.type == "http") {
      e.update({{"base_url", b.base_url},
                {"model", b.model},
                {"supports_prefill", b.supports_prefill},
                {"timeout_s", b.timeout_s},
                {"max_retries", b.max_retries},
                {"backoff_s", b.backoff_s}});
    } else {
      e["tape"] = path_string(b.tape);
    }
    bs.push_back(std::move(e));
  }
  return json{
      {"dataset", path_string(dataset)},
      {"store", store.string()},
      {"prompts_dir", path_string(prompts_dir)},
      {"seed", seed},
      {"sample_fraction", sample_fraction},
      {"workers", workers},
      {"agent",
       {{"backend", agent_backend},
        {"kinds", kinds},
        {"no_tool_token_cap", no_tool_token_cap},
        {"total_token_cap", total_token_cap},
        {"max_operations", max_operations},
        {"final_answer_tokens", final_answer_tokens},
        {"temperature", agent_temperature}}},
      {"limits",
       {{"row_cap", limits.row_cap},
        {"cell_width", limits.cell_width},
        {"timeout_s", static_cast<double>(limits.timeout.count()) / 1000.0}}},
      {"generation",
       {{"generators", gens},
        {"postprocess_backend", postprocess_backend},
        {"k", k},
        {"rounds", rounds},
        {"refinement", refinement},
        {"temperature", generation_temperature},
        {"max_tokens", generation_max_tokens}}},
      {"scaling", {{"backend", scaling_backend}, {"ks", scaling_ks}, {"refinement", scaling_refinement}}},
      {"backends", bs},
  };
}

AgentConfig RunConfig::agent_config(AgentKind kind) const {
  AgentConfig a;
  a.agent_kind = kind;
  a.no_tool_token_cap = no_tool_token_cap;
  a.total_token_cap = total_token_cap;
  a.max_operations = max_operations;
  a.final_answer_tokens = final_answer_tokens;
  a.temperature = agent_temperature;
  a.seed = seed;
  a.limits = limits;
  return a;
}

GenerationOptions RunConfig::generation_options() const {
  GenerationOptions g;
  g.temperature = generation_temperature;
  g.max_tokens = generation_max_tokens;
  g.seed = seed;
  g.timeout = limits.timeout;
  return g;
}

void RunConfig::validate() const {
  agent_config(AgentKind::interaction).validate();
  if (!(sample_fraction > 0.0 && sample_fraction <= 1.0))
    throw ConfigError(fmt::format("sample_fraction {} outside (0, 1]", sample_fraction));
  if (workers == 0) throw ConfigError("workers must be positive");
  if (rounds < 1) throw ConfigError("generation.rounds must be at least 1");
  if (limits.row_cap == 0 || limits.cell_width < 4) throw ConfigError("limits.row_cap and limits.cell_width too small");
  if (limits.timeout.count() <= 0) throw ConfigError("limits.timeout_s must be positive");
  if (agent_kinds.empty()) throw ConfigError("agent.kinds is empty");

  std::set<std::string> names;
  for (const auto& b : backends) {
    if (b.name.empty()) throw ConfigError("backend without a name");
    if (!names.insert(b.name).second) throw ConfigError(fmt::format("duplicate backend \"{}\"", b.name));
    if (b.type == "http") {
      if (b.base_url.empty() || b.model.empty())
        throw ConfigError(fmt::format("http backend \"{}\" needs base_url and model", b.name));
    } else if (b.type == "scripted") {
      if (!b.tape) throw ConfigError(fmt::format("scripted backend \"{}\" needs a tape", b.name));
    } else {
      throw ConfigError(fmt::format("backend \"{}\" has unknown type \"{}\"", b.name, b.type));
    }
  }
  auto check = [&](const std::string& name, const char* role) {
    if (!name.empty() && !names.count(name))
      throw ConfigError(fmt::format("{} refers to unknown backend \"{}\"", role, name));
  };
  check(agent_backend, "agent.backend");
  check(postprocess_backend, "generation.postprocess_backend");
  check(scaling_backend, "scaling.backend");
  for (const auto& g : generators) {
    if (g.backend.empty()) throw ConfigError("generator without a backend");
    check(g.backend, "generation.generators");
  }
}

BackendSet BackendSet::from_config(const RunConfig& cfg) {
  BackendSet set;
  for (const auto& b : cfg.backends) {
    if (b.type == "http") {
      HttpProfile p;
      p.base_url = b.base_url;
      p.model = b.model;
      p.supports_prefill = b.supports_prefill;
      p.timeout = std::chrono::milliseconds(static_cast<std::int64_t>(b.timeout_s * 1000));
      p.max_retries = b.max_retries;
      p.backoff = std::chrono::milliseconds(static_cast<std::int64_t>(b.backoff_s * 1000));
      set.add(std::make_shared<HttpBackend>(b.name, std::move(p)));
    } else if (b.type == "scripted") {
      if (!b.tape) throw ConfigError(fmt::format("scripted backend \"{}\" needs a tape", b.name));
      set.add(std::make_shared<ScriptedBackend>(b.name, load_tape(*b.tape)));
    } else {
      throw ConfigError(fmt::format("backend \"{}\" has unknown type \"{}\"", b.name, b.type));
    }
  }
  return set;
}

void BackendSet::add(std::shared_ptr<Backend> backend) {
  std::string id = backend->id();
  backends_[id] = std::move(backend);
}

Backend& BackendSet::get(const std::string& name) const {
  auto it = backends_.find(name);
  if (it == backends_.end()) throw ConfigError(fmt::format("unknown backend \"{}\"", name));
  return *it->second;
}

std::vector<std::string> BackendSet::names() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : backends_) out.push_back(k);
  return out;
}

}  // namespace raisesql
