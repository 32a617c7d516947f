#include "raise/store.hpp"

#include <atomic>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <unistd.h>

#include "raise/digest.hpp"
#include "raise/error.hpp"
#include "raise/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace raisesql {
namespace {

fs::path temp_name(const fs::path& target) {
  static std::atomic<std::uint64_t> counter{0};
  auto tid = std::hash<std::thread::id>{}(std::this_thread::get_id());
  return target.parent_path() /
         fmt::format(".{}.tmp.{}.{:x}.{}", target.filename().string(), ::getpid(), tid, counter++);
}

fs::path write_temp(const fs::path& target, const std::string& contents) {
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw StoreError(fmt::format("cannot create {}: {}", target.parent_path().string(), ec.message()));
  fs::path tmp = temp_name(target);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw StoreError(fmt::format("cannot write {}", tmp.string()));
    }
  }
  return tmp;
}

// Publishes without clobbering: the hard link fails if the target exists,
// so two concurrent writers cannot both succeed.
void write_file_exclusive(const fs::path& target, const std::string& contents) {
  fs::path tmp = write_temp(target, contents);
  std::error_code ec;
  fs::create_hard_link(tmp, target, ec);
  std::error_code ignore;
  fs::remove(tmp, ignore);
  if (ec == std::errc::file_exists) throw StoreError(fmt::format("{} already exists (use --force)", target.string()));
  if (ec) throw StoreError(fmt::format("cannot publish {}: {}", target.string(), ec.message()));
}

void publish(const fs::path& target, const std::string& contents, bool force) {
  if (force) {
    write_file_atomic(target, contents);
  } else {
    write_file_exclusive(target, contents);
  }
}

std::string utc_now() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

void write_file_atomic(const fs::path& target, const std::string& contents) {
  fs::path tmp = write_temp(target, contents);
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    throw StoreError(fmt::format("cannot rename into {}: {}", target.string(), ec.message()));
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError(fmt::format("cannot read {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string encode_record_name(std::string_view id) {
  std::string out;
  for (std::size_t i = 0; i < id.size(); ++i) {
    auto c = static_cast<unsigned char>(id[i]);
    bool plain = std::isalnum(c) || c == '_' || c == '-' || (c == '.' && i != 0);
    if (plain) {
      out += static_cast<char>(c);
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  if (out.empty()) out = "%";  // never an empty file name
  return out;
}

json RunManifest::to_json() const {
  return json{{"format_version", kFormatVersion},
              {"run_id", run_id},
              {"config", config},
              {"dataset",
               {{"root", dataset_root},
                {"questions_per_stratum", questions_per_stratum},
                {"database_digests", database_digests}}},
              {"seed", seed},
              {"sample_fraction", sample_fraction},
              {"question_ids", question_ids},
              {"created_at", created_at}};
}

RunManifest RunManifest::from_json(const json& j) {
  try {
    if (j.value("format_version", kFormatVersion) != kFormatVersion) throw MalformedRecord("format_version");
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config = j.value("config", json::object());
    const json& ds = j.at("dataset");
    m.dataset_root = ds.value("root", "");
    m.questions_per_stratum = ds.value("questions_per_stratum", std::map<std::string, std::size_t>{});
    m.database_digests = ds.value("database_digests", std::map<std::string, std::string>{});
    m.seed = j.at("seed").get<std::uint64_t>();
    m.sample_fraction = j.at("sample_fraction").get<double>();
    m.question_ids = j.at("question_ids").get<std::vector<std::string>>();
    m.created_at = j.value("created_at", "");
    return m;
  } catch (const json::exception& e) {
    throw StoreError(fmt::format("malformed manifest: {}", e.what()));
  } catch (const MalformedRecord& e) {
    throw StoreError(fmt::format("malformed manifest: {}", e.what()));
  }
}

RunManifest make_manifest(std::string run_id, const json& config, const Dataset& dataset,
                          const std::vector<Question>& sample, std::uint64_t seed, double fraction) {
  RunManifest m;
  m.run_id = std::move(run_id);
  m.config = config;
  m.dataset_root = dataset.root().string();
  for (const auto& q : dataset.questions()) ++m.questions_per_stratum[std::string(to_string(q.difficulty))];
  std::set<std::string> used;
  for (const auto& q : sample) {
    m.question_ids.push_back(q.id);
    used.insert(q.db_id);
  }
  for (const auto& db : used) {
    auto it = dataset.databases().find(db);
    if (it != dataset.databases().end()) m.database_digests[db] = sha256_file(it->second.sqlite_path);
  }
  m.seed = seed;
  m.sample_fraction = fraction;
  m.created_at = utc_now();
  return m;
}

TraceStore::TraceStore(fs::path root) : root_(std::move(root)) {}

fs::path TraceStore::run_dir(const std::string& run_id) const {
  if (run_id.empty()) throw StoreError("empty run id");
  return root_ / encode_record_name(run_id);
}

void TraceStore::write_manifest(const RunManifest& manifest, bool force) {
  fs::path target = run_dir(manifest.run_id) / "manifest.json";
  std::string body = manifest.to_json().dump(2) + "\n";
  if (!force && fs::exists(target)) {
    RunManifest existing = RunManifest::from_json(json::parse(read_file(target)));
    // created_at differs between invocations; everything else must agree.
    existing.created_at = manifest.created_at;
    if (existing.to_json() == manifest.to_json()) return;
    throw StoreError(fmt::format("run {} already has a different manifest (use --force)", manifest.run_id));
  }
  write_file_atomic(target, body);
}

std::optional<RunManifest> TraceStore::read_manifest(const std::string& run_id) const {
  fs::path p = run_dir(run_id) / "manifest.json";
  if (!fs::exists(p)) return std::nullopt;
  try {
    return RunManifest::from_json(json::parse(read_file(p)));
  } catch (const json::parse_error& e) {
    throw StoreError(fmt::format("malformed manifest {}: {}", p.string(), e.what()));
  }
}

namespace {

fs::path trace_path(const fs::path& run, AgentKind kind, const std::string& qid) {
  return run / "traces" / std::string(to_string(kind)) / (encode_record_name(qid) + ".jsonl");
}

void require_manifest(const fs::path& run, const std::string& run_id) {
  if (!fs::exists(run / "manifest.json")) throw StoreError(fmt::format("run {} has no manifest", run_id));
}

}  // namespace

fs::path TraceStore::write_trace(const RunManifest& manifest, const ExplorationTrace& trace, bool force) {
  fs::path run = run_dir(manifest.run_id);
  require_manifest(run, manifest.run_id);
  fs::path target = trace_path(run, trace.agent_kind, trace.question_id);
  publish(target, json(trace).dump() + "\n", force);
  return target;
}

std::optional<ExplorationTrace> TraceStore::read_trace(const std::string& run_id, AgentKind kind,
                                                       const std::string& question_id) const {
  fs::path p = trace_path(run_dir(run_id), kind, question_id);
  if (!fs::exists(p)) return std::nullopt;
  std::string text = read_file(p);
  try {
    return json::parse(text.substr(0, text.find('\n'))).get<ExplorationTrace>();
  } catch (const json::exception& e) {
    throw StoreError(fmt::format("malformed trace {}: {}", p.string(), e.what()));
  } catch (const MalformedRecord& e) {
    throw StoreError(fmt::format("malformed trace {}: {}", p.string(), e.what()));
  }
}

bool TraceStore::has_trace(const std::string& run_id, AgentKind kind, const std::string& question_id) const {
  return fs::exists(trace_path(run_dir(run_id), kind, question_id));
}

fs::path TraceStore::write_candidates(const RunManifest& manifest, const std::string& question_id,
                                      const std::vector<SqlCandidate>& candidates, bool force) {
  fs::path run = run_dir(manifest.run_id);
  require_manifest(run, manifest.run_id);
  fs::path target = run / "candidates" / (encode_record_name(question_id) + ".jsonl");
  std::string body;
  for (const auto& c : candidates) body += json(c).dump() + "\n";
  publish(target, body, force);
  return target;
}

std::optional<std::vector<SqlCandidate>> TraceStore::read_candidates(const std::string& run_id,
                                                                     const std::string& question_id) const {
  fs::path p = run_dir(run_id) / "candidates" / (encode_record_name(question_id) + ".jsonl");
  if (!fs::exists(p)) return std::nullopt;
  std::vector<SqlCandidate> out;
  std::istringstream in(read_file(p));
  std::string line;
  try {
    while (std::getline(in, line)) {
      if (!line.empty()) out.push_back(json::parse(line).get<SqlCandidate>());
    }
  } catch (const json::exception& e) {
    throw StoreError(fmt::format("malformed candidates {}: {}", p.string(), e.what()));
  } catch (const MalformedRecord& e) {
    throw StoreError(fmt::format("malformed candidates {}: {}", p.string(), e.what()));
  }
  return out;
}

fs::path TraceStore::write_run_file(const std::string& run_id, const fs::path& relative, const std::string& contents) {
  if (relative.is_absolute() || relative.empty()) throw StoreError("run file path must be relative");
  for (const auto& part : relative)
    if (part == "..") throw StoreError("run file path must stay inside the run directory");
  fs::path target = run_dir(run_id) / relative;
  write_file_atomic(target, contents);
  return target;
}

}  // namespace raisesql
