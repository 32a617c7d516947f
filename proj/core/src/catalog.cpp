#include "raise/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>
#include <sqlite3.h>

#include "raise/error.hpp"
#include "raise/sandbox.hpp"

namespace raisesql {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

struct StmtDeleter {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using Stmt = std::unique_ptr<sqlite3_stmt, StmtDeleter>;

Stmt prepare(sqlite3* db, const char* sql) {
  sqlite3_stmt* raw = nullptr;
  if (sqlite3_prepare_v2(db, sql, -1, &raw, nullptr) != SQLITE_OK) {
    throw AttachError(fmt::format("introspection failed: {}", sqlite3_errmsg(db)));
  }
  return Stmt(raw);
}

std::string column_text(sqlite3_stmt* s, int i) {
  const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(s, i));
  return p ? std::string(p) : std::string();
}

std::vector<TableInfo> introspect(sqlite3* db) {
  std::vector<TableInfo> tables;
  auto names = prepare(db,
                       "SELECT name FROM sqlite_master WHERE type='table' AND name NOT LIKE 'sqlite\\_%' ESCAPE '\\' "
                       "ORDER BY rowid");
  while (sqlite3_step(names.get()) == SQLITE_ROW) tables.push_back({column_text(names.get(), 0), {}});

  for (auto& table : tables) {
    auto cols = prepare(db, "SELECT name, type, pk FROM pragma_table_info(?1) ORDER BY cid");
    sqlite3_bind_text(cols.get(), 1, table.name.c_str(), -1, SQLITE_TRANSIENT);
    while (sqlite3_step(cols.get()) == SQLITE_ROW) {
      ColumnInfo c;
      c.name = column_text(cols.get(), 0);
      c.declared_type = column_text(cols.get(), 1);
      c.is_primary_key = sqlite3_column_int(cols.get(), 2) > 0;
      table.columns.push_back(std::move(c));
    }
  }

  auto primary_keys = [&](std::string_view name) {
    std::vector<std::string> pks;
    for (const auto& t : tables) {
      if (lower(t.name) != lower(name)) continue;
      for (const auto& c : t.columns)
        if (c.is_primary_key) pks.push_back(c.name);
    }
    return pks;
  };

  for (auto& table : tables) {
    auto fks = prepare(db, "SELECT \"table\", \"from\", \"to\" FROM pragma_foreign_key_list(?1) ORDER BY id, seq");
    sqlite3_bind_text(fks.get(), 1, table.name.c_str(), -1, SQLITE_TRANSIENT);
    std::vector<std::string> implicit_targets;
    while (sqlite3_step(fks.get()) == SQLITE_ROW) {
      std::string target = column_text(fks.get(), 0);
      std::string from = column_text(fks.get(), 1);
      std::string to = sqlite3_column_type(fks.get(), 2) == SQLITE_NULL ? "" : column_text(fks.get(), 2);
      std::vector<std::string> to_cols;
      if (to.empty()) {
        to_cols = primary_keys(target);
      } else {
        to_cols.push_back(to);
      }
      for (auto& c : table.columns) {
        if (lower(c.name) != lower(from)) continue;
        for (const auto& tc : to_cols) c.foreign_key_targets.push_back(target + "." + tc);
      }
    }
  }
  return tables;
}

bool has_csv_extension(const std::filesystem::path& p) { return lower(p.extension().string()) == ".csv"; }

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// RFC 4180 records: quoted fields, doubled quotes, embedded newlines, CRLF.
std::vector<std::vector<std::string>> parse_csv_records(std::string_view s) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < s.size() && s[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < s.size() && s[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      field_started = false;
      records.push_back(std::move(row));
      row.clear();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (field_started || !field.empty() || !row.empty()) {
    row.push_back(std::move(field));
    records.push_back(std::move(row));
  }
  return records;
}

}  // namespace

const TableInfo* DbCatalog::find_table(std::string_view name) const {
  std::string want = lower(trim(name));
  for (const auto& t : tables)
    if (lower(t.name) == want) return &t;
  return nullptr;
}

std::string sanitize_utf8(std::string_view in) {
  if (in.substr(0, 3) == "\xEF\xBB\xBF") in.remove_prefix(3);
  std::string out;
  out.reserve(in.size());
  constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::size_t i = 0;
  while (i < in.size()) {
    auto c = static_cast<unsigned char>(in[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
      ++i;
      continue;
    } else if (c >= 0xC2 && c <= 0xDF) {
      len = 2;
      cp = c & 0x1F;
    } else if (c >= 0xE0 && c <= 0xEF) {
      len = 3;
      cp = c & 0x0F;
    } else if (c >= 0xF0 && c <= 0xF4) {
      len = 4;
      cp = c & 0x07;
    }
    bool valid = len != 0 && i + len <= in.size();
    for (std::size_t k = 1; valid && k < len; ++k) {
      auto cc = static_cast<unsigned char>(in[i + k]);
      if ((cc & 0xC0) != 0x80) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (valid) {
      // Overlong forms, surrogates and values past U+10FFFF.
      if ((len == 3 && (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)))
        valid = false;
    }
    if (valid) {
      out.append(in.substr(i, len));
      i += len;
    } else {
      out.append(kReplacement);
      ++i;
    }
  }
  return out;
}

std::map<std::string, DocEntry> parse_doc_csv(std::string_view bytes, std::vector<std::string>& warnings,
                                              std::string_view source_name) {
  std::map<std::string, DocEntry> entries;
  auto records = parse_csv_records(sanitize_utf8(bytes));
  if (records.empty()) {
    warnings.push_back(fmt::format("{}: empty documentation file", source_name));
    return entries;
  }
  std::map<std::string, std::size_t> header;
  for (std::size_t i = 0; i < records[0].size(); ++i) header.emplace(lower(trim(records[0][i])), i);
  auto col = [&](const char* name) -> std::optional<std::size_t> {
    auto it = header.find(name);
    if (it == header.end()) return std::nullopt;
    return it->second;
  };
  auto original = col("original_column_name");
  if (!original) {
    warnings.push_back(fmt::format("{}: header lacks original_column_name", source_name));
    return entries;
  }
  auto human = col("column_name");
  auto desc = col("column_description");
  auto format = col("data_format");
  auto values = col("value_description");
  auto get = [](const std::vector<std::string>& row, std::optional<std::size_t> idx) {
    return idx && *idx < row.size() ? trim(row[*idx]) : std::string();
  };

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& row = records[r];
    bool blank = std::all_of(row.begin(), row.end(), [](const std::string& f) { return trim(f).empty(); });
    if (blank) {
      // A bare empty line is fine; a row of empty fields is a broken record.
      if (row.size() > 1) warnings.push_back(fmt::format("{}: row {} is empty; skipped", source_name, r + 1));
      continue;
    }
    if (row.size() > records[0].size()) {
      warnings.push_back(fmt::format("{}: row {} has {} fields, expected {}; skipped", source_name, r + 1,
                                     row.size(), records[0].size()));
      continue;
    }
    DocEntry e;
    e.original_column_name = get(row, original);
    if (e.original_column_name.empty()) {
      warnings.push_back(fmt::format("{}: row {} has no column name; skipped", source_name, r + 1));
      continue;
    }
    e.human_column_name = get(row, human);
    e.description = get(row, desc);
    e.data_format = get(row, format);
    e.value_description = get(row, values);
    entries.insert_or_assign(lower(e.original_column_name), std::move(e));
  }
  return entries;
}

DbCatalog attach_database(const std::filesystem::path& path, const std::optional<std::filesystem::path>& docs_dir,
                          std::string db_id) {
  DbCatalog catalog;
  catalog.path = path;
  catalog.db_id = db_id.empty() ? path.stem().string() : std::move(db_id);
  {
    Connection conn(path);
    // Private connection: schema pragmas need the authorizer out of the way.
    sqlite3_set_authorizer(conn.handle(), nullptr, nullptr);
    catalog.tables = introspect(conn.handle());
  }

  if (!docs_dir) return catalog;
  std::error_code ec;
  if (!std::filesystem::is_directory(*docs_dir, ec)) {
    catalog.warnings.push_back("documentation directory not readable: " + docs_dir->string());
    spdlog::warn("{}: {}", catalog.db_id, catalog.warnings.back());
    return catalog;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*docs_dir, ec)) {
    if (entry.is_regular_file() && has_csv_extension(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::string bytes;
    try {
      bytes = read_bytes(file);
    } catch (const Error& e) {
      catalog.warnings.push_back(e.what());
      continue;
    }
    std::string stem = file.stem().string();
    const TableInfo* table = catalog.find_table(stem);
    std::string table_name = table ? table->name : stem;
    auto entries = parse_doc_csv(bytes, catalog.warnings, file.filename().string());
    for (auto& [col_key, entry] : entries) {
      bool known = table && std::any_of(table->columns.begin(), table->columns.end(),
                                        [&](const ColumnInfo& c) { return lower(c.name) == col_key; });
      entry.dangling = !known;
      if (!known)
        catalog.warnings.push_back(fmt::format("{}: {}.{} is documented but not in the schema",
                                               file.filename().string(), table_name, entry.original_column_name));
      catalog.docs.insert_or_assign(lower(table_name) + "." + col_key, std::move(entry));
    }
  }
  for (const auto& w : catalog.warnings) spdlog::debug("{}: {}", catalog.db_id, w);
  return catalog;
}

}  // namespace raisesql
