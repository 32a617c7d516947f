#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "raise/catalog.hpp"
#include "raise/types.hpp"

namespace raisesql {

struct DatabaseLocation {
  std::filesystem::path sqlite_path;
  std::optional<std::filesystem::path> description_dir;
};

/// Benchmark dataset: questions plus where each database lives. Catalogs
/// are attached on first use and cached.
class Dataset {
 public:
  Dataset(std::filesystem::path root, std::vector<Question> questions,
          std::map<std::string, DatabaseLocation> databases, std::vector<std::string> warnings);

  const std::filesystem::path& root() const noexcept { return root_; }
  const std::vector<Question>& questions() const noexcept { return questions_; }
  const std::map<std::string, DatabaseLocation>& databases() const noexcept { return databases_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  const Question* find_question(std::string_view id) const;
  /// Throws IngestError for an unknown db_id, AttachError for bad files.
  std::shared_ptr<const DbCatalog> catalog(const std::string& db_id) const;

 private:
  std::filesystem::path root_;
  std::vector<Question> questions_;
  std::map<std::string, DatabaseLocation> databases_;
  std::vector<std::string> warnings_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::shared_ptr<const DbCatalog>> cache_;
};

/// Reads <root>/dev.json (or questions.json) and
/// <root>/dev_databases/<db_id>/<db_id>.sqlite with an optional sibling
/// database_description/ directory.
std::shared_ptr<Dataset> ingest_bird_layout(const std::filesystem::path& root);

/// Questions file contents in the benchmark's format.
std::vector<Question> parse_questions_json(const std::string& text);

}  // namespace raisesql
