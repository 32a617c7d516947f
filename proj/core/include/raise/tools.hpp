#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raise/catalog.hpp"
#include "raise/sandbox.hpp"
#include "raise/types.hpp"

namespace raisesql {

/// A tool result as it is appended to the model's context.
struct RenderedResult {
  std::string text;
  std::int64_t row_count = 0;
  bool truncated = false;
  // Soft failure: the text explains what went wrong.
  bool is_error = false;
};

RenderedResult read_table_names(const DbCatalog& catalog);
RenderedResult read_table_columns(const DbCatalog& catalog, std::string_view table);
RenderedResult read_columns_documentation(const DbCatalog& catalog, std::span<const std::string> names);
RenderedResult run_query(Connection& conn, std::string_view sql, const ExecLimits& limits = {});

/// Aligned text table with header, at most `limits.row_cap` data rows and a
/// "... (<N> more rows)" footer when rows were cut.
std::string render_table(const std::vector<std::string>& columns, const std::vector<std::vector<CellValue>>& rows,
                         std::int64_t total_rows, std::size_t cell_width);

/// Dispatches a parsed call to the matching tool. Never throws for bad input.
RenderedResult execute_tool(const ToolCall& call, const DbCatalog& catalog, Connection& conn,
                            const ExecLimits& limits = {});

/// Truncates to at most `width` code points, marking the cut with "...".
std::string clip_utf8(std::string_view s, std::size_t width);

}  // namespace raisesql
