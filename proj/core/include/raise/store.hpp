#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raise/dataset.hpp"
#include "raise/evaluation.hpp"
#include "raise/types.hpp"

namespace raisesql {

struct RunManifest {
  std::string run_id;
  nlohmann::json config;  // RunConfig::to_json() snapshot
  // Dataset fingerprint.
  std::string dataset_root;
  std::map<std::string, std::size_t> questions_per_stratum;
  std::map<std::string, std::string> database_digests;  // db_id -> sha256
  // Sample used by the run.
  std::uint64_t seed = 0;
  double sample_fraction = 1.0;
  std::vector<std::string> question_ids;
  std::string created_at;

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
};

/// Builds the fingerprint part of a manifest from a dataset and its sample.
RunManifest make_manifest(std::string run_id, const nlohmann::json& config, const Dataset& dataset,
                          const std::vector<Question>& sample, std::uint64_t seed, double fraction);

/// Run-directory layout:
///   <root>/<run_id>/manifest.json
///   <root>/<run_id>/traces/<agent_kind>/<question_id>.jsonl
///   <root>/<run_id>/candidates/<question_id>.jsonl
///   <root>/<run_id>/eval/...
/// Every record file is written to a temporary name and renamed into place.
class TraceStore {
 public:
  explicit TraceStore(std::filesystem::path root);

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path run_dir(const std::string& run_id) const;

  void write_manifest(const RunManifest& manifest, bool force = false);
  std::optional<RunManifest> read_manifest(const std::string& run_id) const;

  /// Throws StoreError if the manifest is missing, or if the trace already
  /// exists and `force` is false.
  std::filesystem::path write_trace(const RunManifest& manifest, const ExplorationTrace& trace, bool force = false);
  std::optional<ExplorationTrace> read_trace(const std::string& run_id, AgentKind kind,
                                             const std::string& question_id) const;
  bool has_trace(const std::string& run_id, AgentKind kind, const std::string& question_id) const;

  std::filesystem::path write_candidates(const RunManifest& manifest, const std::string& question_id,
                                         const std::vector<SqlCandidate>& candidates, bool force = false);
  std::optional<std::vector<SqlCandidate>> read_candidates(const std::string& run_id,
                                                           const std::string& question_id) const;

  /// Writes an arbitrary file under the run directory (atomic).
  std::filesystem::path write_run_file(const std::string& run_id, const std::filesystem::path& relative,
                                       const std::string& contents);

 private:
  std::filesystem::path root_;
};

/// Writes `contents` to `target` through a temporary file and rename.
void write_file_atomic(const std::filesystem::path& target, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// File-name-safe encoding of a question id (reversible percent escaping).
std::string encode_record_name(std::string_view id);

}  // namespace raisesql
