#include "raise/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "raise/error.hpp"

namespace fs = std::filesystem;

namespace raisesql {

Dataset::Dataset(fs::path root, std::vector<Question> questions, std::map<std::string, DatabaseLocation> databases,
                 std::vector<std::string> warnings)
    : root_(std::move(root)),
      questions_(std::move(questions)),
      databases_(std::move(databases)),
      warnings_(std::move(warnings)) {}

const Question* Dataset::find_question(std::string_view id) const {
  for (const auto& q : questions_)
    if (q.id == id) return &q;
  return nullptr;
}

std::shared_ptr<const DbCatalog> Dataset::catalog(const std::string& db_id) const {
  std::lock_guard lock(mu_);
  if (auto it = cache_.find(db_id); it != cache_.end()) return it->second;
  auto loc = databases_.find(db_id);
  if (loc == databases_.end()) throw IngestError(fmt::format("unknown database \"{}\"", db_id));
  auto cat = std::make_shared<const DbCatalog>(
      attach_database(loc->second.sqlite_path, loc->second.description_dir, db_id));
  for (const auto& w : cat->warnings) spdlog::warn("{}: {}", db_id, w);
  cache_.emplace(db_id, cat);
  return cat;
}

std::vector<Question> parse_questions_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw IngestError(fmt::format("questions file is not valid JSON: {}", e.what()));
  }
  if (!doc.is_array()) throw IngestError("questions file must hold a JSON array");
  std::vector<Question> out;
  out.reserve(doc.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    Question q = parse_question_record(doc[i], std::to_string(i));
    if (!seen.insert(q.id).second) throw IngestError(fmt::format("duplicate question id \"{}\"", q.id));
    out.push_back(std::move(q));
  }
  return out;
}

std::shared_ptr<Dataset> ingest_bird_layout(const fs::path& root) {
  if (!fs::is_directory(root)) throw IngestError(fmt::format("dataset root {} is not a directory", root.string()));
  fs::path questions_file;
  for (const char* name : {"dev.json", "questions.json"}) {
    if (fs::is_regular_file(root / name)) {
      questions_file = root / name;
      break;
    }
  }
  if (questions_file.empty()) throw IngestError(fmt::format("no dev.json or questions.json under {}", root.string()));

  std::ifstream in(questions_file, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  std::vector<Question> all = parse_questions_json(buf.str());

  std::vector<std::string> warnings;
  std::map<std::string, DatabaseLocation> dbs;
  std::set<std::string> missing;
  for (const auto& q : all) {
    if (dbs.count(q.db_id) || missing.count(q.db_id)) continue;
    fs::path dir = root / "dev_databases" / q.db_id;
    fs::path file = dir / (q.db_id + ".sqlite");
    if (!fs::is_regular_file(file)) {
      missing.insert(q.db_id);
      warnings.push_back(fmt::format("database {} not found at {}; its questions are skipped", q.db_id,
                                     file.string()));
      continue;
    }
    DatabaseLocation loc{fs::absolute(file), std::nullopt};
    if (fs::is_directory(dir / "database_description")) loc.description_dir = fs::absolute(dir / "database_description");
    dbs.emplace(q.db_id, std::move(loc));
  }

  std::vector<Question> kept;
  for (auto& q : all)
    if (dbs.count(q.db_id)) kept.push_back(std::move(q));
  for (const auto& w : warnings) spdlog::warn("{}", w);
  return std::make_shared<Dataset>(fs::absolute(root), std::move(kept), std::move(dbs), std::move(warnings));
}

}  // namespace raisesql
