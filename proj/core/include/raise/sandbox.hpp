#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "raise/cell.hpp"

struct sqlite3;

namespace raisesql {

struct ExecLimits {
  std::size_t row_cap = 20;
  std::size_t cell_width = 80;
  std::chrono::milliseconds timeout{30'000};
};

/// Read-only connection. The database is opened immutable, with
/// query_only set and an authorizer that denies everything except reads.
class Connection {
 public:
  explicit Connection(const std::filesystem::path& path);
  ~Connection();
  Connection(Connection&& other) noexcept;
  Connection& operator=(Connection&& other) noexcept;
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  sqlite3* handle() const noexcept { return db_; }
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  sqlite3* db_ = nullptr;
  std::filesystem::path path_;
};

/// Statement gate: a single SELECT or WITH statement, optionally followed by
/// semicolons, whitespace and comments.
bool is_single_select(std::string_view sql);

struct StatementRun {
  enum class Status { ok, rejected, sql_error, timeout, row_ceiling };
  Status status = Status::ok;
  std::string message;
  std::vector<std::string> column_names;
  std::vector<std::vector<CellValue>> rows;  // at most `keep_rows`
  std::int64_t total_rows = 0;
};

/// Executes one gated statement. Keeps the first `keep_rows` rows and counts
/// the rest. With `ceiling` set, stops with row_ceiling once more than
/// `ceiling` rows have been produced.
StatementRun run_statement(Connection& conn, std::string_view sql, std::chrono::milliseconds timeout,
                           std::size_t keep_rows, std::optional<std::size_t> ceiling = std::nullopt);

inline constexpr std::string_view kReadOnlyRejection = "read-only: statement rejected";

std::string timeout_message(std::chrono::milliseconds timeout);

}  // namespace raisesql
