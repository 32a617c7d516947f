#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace raisesql {

struct ColumnInfo {
  std::string name;
  std::string declared_type;
  bool is_primary_key = false;
  std::vector<std::string> foreign_key_targets;  // "table.column"
};

struct TableInfo {
  std::string name;
  std::vector<ColumnInfo> columns;
};

struct DocEntry {
  std::string original_column_name;
  std::string human_column_name;
  std::string description;
  std::string data_format;
  std::string value_description;
  // The documented table.column does not exist in the schema.
  bool dangling = false;
};

/// Immutable schema and documentation snapshot of one attached database.
/// Shareable between workers; each worker opens its own Connection.
struct DbCatalog {
  std::string db_id;
  std::filesystem::path path;
  std::vector<TableInfo> tables;  // schema declaration order
  // Keyed by lower-cased "table.column".
  std::map<std::string, DocEntry> docs;
  std::vector<std::string> warnings;

  const TableInfo* find_table(std::string_view name) const;  // case-insensitive
};

/// Opens `path` read-only, introspects the schema and optionally loads the
/// per-table documentation files in `docs_dir`. Throws AttachError when the
/// file is not a readable SQLite database. Documentation problems only
/// produce warnings.
DbCatalog attach_database(const std::filesystem::path& path,
                          const std::optional<std::filesystem::path>& docs_dir = std::nullopt,
                          std::string db_id = {});

/// Parses one documentation file body into entries keyed by lower-cased
/// column name. Invalid UTF-8 is replaced, malformed rows are skipped and
/// reported through `warnings`.
std::map<std::string, DocEntry> parse_doc_csv(std::string_view bytes, std::vector<std::string>& warnings,
                                              std::string_view source_name = {});

/// Replaces invalid UTF-8 sequences with U+FFFD and drops a leading BOM.
std::string sanitize_utf8(std::string_view bytes);

}  // namespace raisesql
