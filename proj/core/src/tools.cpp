#include "raise/tools.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

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

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

// Keeps each rendered cell on one line.
std::string flatten_cell(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += ' '; break;
      default: out.push_back(c);
    }
  }
  return out;
}

RenderedResult soft_error(std::string text) {
  RenderedResult r;
  r.text = std::move(text);
  r.is_error = true;
  return r;
}

std::string describe_doc(const std::string& key, const DocEntry& d) {
  std::vector<std::string> parts;
  if (!d.description.empty()) parts.push_back("description=" + d.description);
  if (!d.human_column_name.empty()) parts.push_back("name=" + d.human_column_name);
  if (!d.data_format.empty()) parts.push_back("format=" + d.data_format);
  if (!d.value_description.empty()) parts.push_back("values=" + d.value_description);
  if (parts.empty()) return key + ": (documented, no description)";
  return key + ": " + fmt::format("{}", fmt::join(parts, "; "));
}

}  // namespace

std::string clip_utf8(std::string_view s, std::size_t width) {
  if (utf8_length(s) <= width) return std::string(s);
  std::size_t keep = width > 3 ? width - 3 : 0;
  std::size_t i = 0;
  std::size_t cps = 0;
  while (i < s.size()) {
    if ((static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) {
      if (cps == keep) break;
      ++cps;
    }
    ++i;
  }
  return std::string(s.substr(0, i)) + std::string("...").substr(0, std::min<std::size_t>(3, width));
}

std::string render_table(const std::vector<std::string>& columns, const std::vector<std::vector<CellValue>>& rows,
                         std::int64_t total_rows, std::size_t cell_width) {
  const std::size_t ncols = columns.size();
  std::vector<std::vector<std::string>> cells;
  cells.reserve(rows.size() + 1);
  std::vector<std::string> head;
  for (const auto& c : columns) head.push_back(clip_utf8(flatten_cell(c), cell_width));
  cells.push_back(std::move(head));
  for (const auto& row : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < ncols; ++i) {
      line.push_back(i < row.size() ? clip_utf8(flatten_cell(render_cell(row[i])), cell_width) : std::string());
    }
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(ncols, 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < ncols; ++i) widths[i] = std::max(widths[i], utf8_length(line[i]));

  auto emit = [&](const std::vector<std::string>& line, std::string& out) {
    std::string text;
    for (std::size_t i = 0; i < ncols; ++i) {
      if (i) text += " | ";
      text += line[i];
      if (i + 1 < ncols) text.append(widths[i] - utf8_length(line[i]), ' ');
    }
    out += text;
    out += '\n';
  };

  std::string out;
  emit(cells[0], out);
  for (std::size_t i = 0; i < ncols; ++i) {
    if (i) out += "-+-";
    out.append(std::max<std::size_t>(widths[i], 1), '-');
  }
  out += '\n';
  for (std::size_t r = 1; r < cells.size(); ++r) emit(cells[r], out);
  if (rows.empty()) out += "(0 rows)\n";
  auto shown = static_cast<std::int64_t>(rows.size());
  if (total_rows > shown) out += fmt::format("... ({} more rows)\n", total_rows - shown);
  if (!out.empty()) out.pop_back();
  return out;
}

RenderedResult read_table_names(const DbCatalog& catalog) {
  RenderedResult r;
  r.row_count = static_cast<std::int64_t>(catalog.tables.size());
  if (catalog.tables.empty()) {
    r.text = "(no tables)";
    return r;
  }
  for (std::size_t i = 0; i < catalog.tables.size(); ++i) {
    if (i) r.text += '\n';
    r.text += catalog.tables[i].name;
  }
  return r;
}

RenderedResult read_table_columns(const DbCatalog& catalog, std::string_view table) {
  const TableInfo* t = catalog.find_table(table);
  if (!t) {
    std::vector<std::string> names;
    for (const auto& tbl : catalog.tables) names.push_back(tbl.name);
    return soft_error(fmt::format("table not found: {}; available: {}", trim(table), fmt::join(names, ", ")));
  }
  RenderedResult r;
  r.row_count = static_cast<std::int64_t>(t->columns.size());
  for (std::size_t i = 0; i < t->columns.size(); ++i) {
    const auto& c = t->columns[i];
    if (i) r.text += '\n';
    r.text += c.name;
    if (!c.declared_type.empty()) r.text += " " + c.declared_type;
    if (c.is_primary_key) r.text += " (PK)";
    for (const auto& fk : c.foreign_key_targets) r.text += " (FK -> " + fk + ")";
  }
  if (t->columns.empty()) r.text = "(no columns)";
  return r;
}

RenderedResult read_columns_documentation(const DbCatalog& catalog, std::span<const std::string> names) {
  RenderedResult r;
  if (names.empty()) {
    r.text = "(no columns requested)";
    return r;
  }
  std::vector<std::string> lines;
  for (const auto& raw : names) {
    std::string name = trim(raw);
    std::string key = lower(name);
    if (key.find('.') != std::string::npos) {
      auto it = catalog.docs.find(key);
      if (it != catalog.docs.end()) {
        lines.push_back(describe_doc(name, it->second));
        ++r.row_count;
      } else {
        lines.push_back(name + ": no documentation");
      }
      continue;
    }
    // Unqualified: every table that documents a column of that name.
    bool found = false;
    for (const auto& [k, entry] : catalog.docs) {
      auto dot = k.find('.');
      if (k.substr(dot + 1) == key) {
        lines.push_back(describe_doc(k, entry));
        found = true;
      }
    }
    if (found) {
      ++r.row_count;
    } else {
      lines.push_back(name + ": no documentation");
    }
  }
  r.text = fmt::format("{}", fmt::join(lines, "\n"));
  return r;
}

RenderedResult run_query(Connection& conn, std::string_view sql, const ExecLimits& limits) {
  StatementRun run = run_statement(conn, sql, limits.timeout, limits.row_cap);
  switch (run.status) {
    case StatementRun::Status::ok: {
      RenderedResult r;
      r.row_count = run.total_rows;
      r.truncated = run.total_rows > static_cast<std::int64_t>(run.rows.size());
      r.text = render_table(run.column_names, run.rows, run.total_rows, limits.cell_width);
      return r;
    }
    case StatementRun::Status::sql_error: return soft_error("error: " + run.message);
    default: return soft_error(run.message);
  }
}

RenderedResult execute_tool(const ToolCall& call, const DbCatalog& catalog, Connection& conn,
                            const ExecLimits& limits) {
  if (!is_valid(call)) return soft_error(fmt::format("invalid arguments for {}", tool_name(call.tool)));
  switch (call.tool) {
    case Tool::read_table_names: return read_table_names(catalog);
    case Tool::read_table_columns: return read_table_columns(catalog, std::get<std::string>(call.args[0]));
    case Tool::read_columns_documentation:
      return read_columns_documentation(catalog, std::get<std::vector<std::string>>(call.args[0]));
    case Tool::run_query: return run_query(conn, std::get<std::string>(call.args[0]), limits);
  }
  return soft_error("unknown tool");
}

}  // namespace raisesql
