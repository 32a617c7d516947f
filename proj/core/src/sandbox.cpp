#include "raise/sandbox.hpp"

#include <cstring>
#include <fstream>

#include <fmt/format.h>
#include <sqlite3.h>

#include "raise/error.hpp"
#include "sql_lexer.hpp"

namespace raisesql {
namespace detail {

namespace {
bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }
}  // namespace

std::vector<Tok> lex_sql(std::string_view s) {
  std::vector<Tok> out;
  std::size_t i = 0;
  const std::size_t n = s.size();
  auto quoted = [&](char close, bool doubled) {
    std::size_t j = i + 1;
    while (j < n) {
      if (s[j] == close) {
        if (doubled && j + 1 < n && s[j + 1] == close) {
          j += 2;
          continue;
        }
        return j + 1;
      }
      ++j;
    }
    return n;
  };
  while (i < n) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t j = i + 1;
    TokKind kind = TokKind::punct;
    if (std::isspace(c)) {
      while (j < n && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
      kind = TokKind::space;
    } else if (c == '-' && i + 1 < n && s[i + 1] == '-') {
      j = s.find('\n', i);
      j = j == std::string_view::npos ? n : j;
      kind = TokKind::comment;
    } else if (c == '/' && i + 1 < n && s[i + 1] == '*') {
      j = s.find("*/", i + 2);
      j = j == std::string_view::npos ? n : j + 2;
      kind = TokKind::comment;
    } else if (c == '\'') {
      j = quoted('\'', true);
      kind = TokKind::string;
    } else if (c == '"') {
      j = quoted('"', true);
      kind = TokKind::quoted_ident;
    } else if (c == '`') {
      j = quoted('`', true);
      kind = TokKind::quoted_ident;
    } else if (c == '[') {
      j = quoted(']', false);
      kind = TokKind::quoted_ident;
    } else if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      while (j < n && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '.')) ++j;
      kind = TokKind::number;
    } else if (is_word_start(c)) {
      while (j < n && is_word_char(static_cast<unsigned char>(s[j]))) ++j;
      kind = TokKind::word;
    }
    out.push_back({kind, i, j});
    i = j;
  }
  return out;
}

bool word_is(std::string_view sql, const Tok& t, std::string_view keyword) {
  if (t.kind != TokKind::word || t.end - t.begin != keyword.size()) return false;
  for (std::size_t k = 0; k < keyword.size(); ++k) {
    if (std::toupper(static_cast<unsigned char>(sql[t.begin + k])) !=
        std::toupper(static_cast<unsigned char>(keyword[k])))
      return false;
  }
  return true;
}

}  // namespace detail

namespace {

constexpr unsigned char kSqliteMagic[] = "SQLite format 3";  // 16 bytes with the NUL

void check_sqlite_header(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw AttachError("not a readable file: " + path.string());
  std::ifstream in(path, std::ios::binary);
  char header[16] = {};
  if (!in || !in.read(header, sizeof header) || std::memcmp(header, kSqliteMagic, sizeof header) != 0) {
    throw AttachError("not an SQLite database: " + path.string());
  }
}

std::string file_uri(const std::filesystem::path& path) {
  std::string abs = std::filesystem::absolute(path).string();
  std::string out = "file:";
  for (unsigned char c : abs) {
    if (std::isalnum(c) || c == '/' || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out += fmt::format("%{:02X}", c);
    }
  }
  return out + "?mode=ro&immutable=1";
}

int sandbox_authorizer(void*, int action, const char*, const char*, const char*, const char*) {
  switch (action) {
    case SQLITE_SELECT:
    case SQLITE_READ:
    case SQLITE_FUNCTION:
    case SQLITE_RECURSIVE:
      return SQLITE_OK;
    default:
      return SQLITE_DENY;
  }
}

struct Deadline {
  std::chrono::steady_clock::time_point at;
  bool expired = false;
};

int progress_check(void* ctx) {
  auto* d = static_cast<Deadline*>(ctx);
  if (std::chrono::steady_clock::now() >= d->at) {
    d->expired = true;
    return 1;
  }
  return 0;
}

RawCell read_column(sqlite3_stmt* stmt, int i) {
  switch (sqlite3_column_type(stmt, i)) {
    case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(stmt, i));
    case SQLITE_FLOAT: return sqlite3_column_double(stmt, i);
    case SQLITE_TEXT: {
      const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt, i));
      return std::string(p ? p : "", static_cast<std::size_t>(sqlite3_column_bytes(stmt, i)));
    }
    case SQLITE_BLOB: {
      const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, i));
      auto n = static_cast<std::size_t>(sqlite3_column_bytes(stmt, i));
      return std::vector<std::uint8_t>(p, p + n);
    }
    default: return std::monostate{};
  }
}

struct StmtDeleter {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};

}  // namespace

Connection::Connection(const std::filesystem::path& path) : path_(path) {
  check_sqlite_header(path);
  int rc = sqlite3_open_v2(file_uri(path).c_str(), &db_,
                           SQLITE_OPEN_READONLY | SQLITE_OPEN_URI | SQLITE_OPEN_NOMUTEX, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
    sqlite3_close(db_);
    db_ = nullptr;
    throw AttachError("cannot open " + path.string() + ": " + msg);
  }
  sqlite3_exec(db_, "PRAGMA query_only=1", nullptr, nullptr, nullptr);
  sqlite3_db_config(db_, SQLITE_DBCONFIG_DEFENSIVE, 1, nullptr);
  sqlite3_db_config(db_, SQLITE_DBCONFIG_ENABLE_LOAD_EXTENSION, 0, nullptr);
  sqlite3_limit(db_, SQLITE_LIMIT_ATTACHED, 0);
  // A probe read catches files with a valid header but a corrupt body.
  rc = sqlite3_exec(db_, "SELECT count(*) FROM sqlite_master", nullptr, nullptr, nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = sqlite3_errmsg(db_);
    sqlite3_close(db_);
    db_ = nullptr;
    throw AttachError("cannot read " + path.string() + ": " + msg);
  }
  sqlite3_set_authorizer(db_, sandbox_authorizer, nullptr);
}

Connection::~Connection() {
  if (db_) sqlite3_close(db_);
}

Connection::Connection(Connection&& other) noexcept
    : db_(std::exchange(other.db_, nullptr)), path_(std::move(other.path_)) {}

Connection& Connection::operator=(Connection&& other) noexcept {
  if (this != &other) {
    if (db_) sqlite3_close(db_);
    db_ = std::exchange(other.db_, nullptr);
    path_ = std::move(other.path_);
  }
  return *this;
}

bool is_single_select(std::string_view sql) {
  using namespace detail;
  auto toks = lex_sql(sql);
  bool seen_first = false;
  bool after_semicolon = false;
  for (const auto& t : toks) {
    if (is_trivia(t)) continue;
    if (!seen_first) {
      if (!word_is(sql, t, "SELECT") && !word_is(sql, t, "WITH")) return false;
      seen_first = true;
      continue;
    }
    bool semi = t.kind == TokKind::punct && sql[t.begin] == ';';
    if (after_semicolon && !semi) return false;
    if (semi) after_semicolon = true;
  }
  return seen_first;
}

std::string timeout_message(std::chrono::milliseconds timeout) {
  return fmt::format("query timed out after {:g}s", static_cast<double>(timeout.count()) / 1000.0);
}

StatementRun run_statement(Connection& conn, std::string_view sql, std::chrono::milliseconds timeout,
                           std::size_t keep_rows, std::optional<std::size_t> ceiling) {
  StatementRun run;
  if (!is_single_select(sql)) {
    run.status = StatementRun::Status::rejected;
    run.message = std::string(kReadOnlyRejection);
    return run;
  }
  sqlite3* db = conn.handle();
  sqlite3_stmt* raw = nullptr;
  int rc = sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &raw, nullptr);
  std::unique_ptr<sqlite3_stmt, StmtDeleter> stmt(raw);
  if (rc != SQLITE_OK || !stmt) {
    if (sqlite3_errcode(db) == SQLITE_AUTH) {
      run.status = StatementRun::Status::rejected;
      run.message = std::string(kReadOnlyRejection);
    } else {
      run.status = StatementRun::Status::sql_error;
      run.message = rc == SQLITE_OK ? "empty statement" : sqlite3_errmsg(db);
    }
    return run;
  }
  if (!sqlite3_stmt_readonly(stmt.get())) {
    run.status = StatementRun::Status::rejected;
    run.message = std::string(kReadOnlyRejection);
    return run;
  }

  const int ncols = sqlite3_column_count(stmt.get());
  for (int i = 0; i < ncols; ++i) {
    const char* name = sqlite3_column_name(stmt.get(), i);
    run.column_names.emplace_back(name ? name : "");
  }

  Deadline deadline{std::chrono::steady_clock::now() + timeout};
  sqlite3_progress_handler(db, 1000, progress_check, &deadline);
  struct ResetProgress {
    sqlite3* db;
    ~ResetProgress() { sqlite3_progress_handler(db, 0, nullptr, nullptr); }
  } reset{db};

  while (true) {
    rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_ROW) {
      ++run.total_rows;
      if (ceiling && static_cast<std::size_t>(run.total_rows) > *ceiling) {
        run.status = StatementRun::Status::row_ceiling;
        run.message = fmt::format("result exceeds {} rows", *ceiling);
        run.rows.clear();
        return run;
      }
      if (run.rows.size() < keep_rows) {
        std::vector<CellValue> row;
        row.reserve(static_cast<std::size_t>(ncols));
        for (int i = 0; i < ncols; ++i) row.push_back(canonicalize_value(read_column(stmt.get(), i)));
        run.rows.push_back(std::move(row));
      }
      continue;
    }
    if (rc == SQLITE_DONE) break;
    if (deadline.expired || rc == SQLITE_INTERRUPT) {
      run.status = StatementRun::Status::timeout;
      run.message = timeout_message(timeout);
    } else {
      run.status = StatementRun::Status::sql_error;
      run.message = sqlite3_errmsg(db);
    }
    run.rows.clear();
    return run;
  }
  return run;
}

}  // namespace raisesql
