#include "raise/select_list.hpp"

#include <cctype>

#include "sql_lexer.hpp"

namespace raisesql {
namespace {

using detail::Tok;
using detail::TokKind;

struct Cursor {
  std::string_view sql;
  std::vector<Tok> toks;  // significant tokens only

  bool punct(std::size_t i, char c) const {
    return i < toks.size() && toks[i].kind == TokKind::punct && sql[toks[i].begin] == c;
  }
  bool word(std::size_t i, std::string_view kw) const { return i < toks.size() && detail::word_is(sql, toks[i], kw); }

  // Index of the ')' matching the '(' at i, or npos.
  std::size_t matching(std::size_t i, std::size_t limit) const {
    int depth = 0;
    for (std::size_t k = i; k < limit; ++k) {
      if (punct(k, '(')) ++depth;
      if (punct(k, ')') && --depth == 0) return k;
    }
    return std::string_view::npos;
  }
};

constexpr std::string_view kListTerminators[] = {"FROM",   "WHERE",  "GROUP",     "HAVING", "ORDER",
                                                 "LIMIT",  "WINDOW", "UNION",     "INTERSECT", "EXCEPT"};
constexpr std::string_view kCompound[] = {"UNION", "INTERSECT", "EXCEPT"};

}  // namespace

std::optional<SelectListSpan> locate_outer_select_list(std::string_view sql) {
  Cursor c{sql, {}};
  for (const auto& t : detail::lex_sql(sql))
    if (!detail::is_trivia(t)) c.toks.push_back(t);

  std::size_t lo = 0;
  std::size_t hi = c.toks.size();
  while (hi > lo && c.punct(hi - 1, ';')) --hi;

  // Peel parentheses that wrap the whole statement.
  while (c.punct(lo, '(') && c.matching(lo, hi) == hi - 1) {
    ++lo;
    --hi;
  }

  std::size_t i = lo;
  if (c.word(i, "WITH")) {
    ++i;
    if (c.word(i, "RECURSIVE")) ++i;
    while (true) {
      if (i >= hi) return std::nullopt;
      ++i;  // table name
      if (c.punct(i, '(')) {
        auto close = c.matching(i, hi);
        if (close == std::string_view::npos) return std::nullopt;
        i = close + 1;
      }
      if (!c.word(i, "AS")) return std::nullopt;
      ++i;
      if (c.word(i, "NOT")) ++i;
      if (c.word(i, "MATERIALIZED")) ++i;
      if (!c.punct(i, '(')) return std::nullopt;
      auto close = c.matching(i, hi);
      if (close == std::string_view::npos) return std::nullopt;
      i = close + 1;
      if (c.punct(i, ',')) {
        ++i;
        continue;
      }
      break;
    }
  }
  if (!c.word(i, "SELECT")) return std::nullopt;
  std::size_t list_begin = c.toks[i].end;
  ++i;
  if (c.word(i, "DISTINCT") || c.word(i, "ALL")) {
    list_begin = c.toks[i].end;
    ++i;
  }

  int depth = 0;
  std::size_t k = i;
  bool found_end = false;
  for (; k < hi; ++k) {
    if (c.punct(k, '(')) ++depth;
    if (c.punct(k, ')')) --depth;
    if (depth != 0) continue;
    for (auto kw : kListTerminators) {
      if (c.word(k, kw)) {
        found_end = true;
        break;
      }
    }
    if (found_end) break;
  }
  if (k == i) return std::nullopt;  // empty select-list
  // Trivia between the list and the next clause stays outside the span.
  const std::size_t list_end = c.toks[k - 1].end;

  // Compound selects: a different list per arm.
  depth = 0;
  for (std::size_t m = k; m < hi; ++m) {
    if (c.punct(m, '(')) ++depth;
    if (c.punct(m, ')')) --depth;
    if (depth != 0) continue;
    for (auto kw : kCompound)
      if (c.word(m, kw)) return std::nullopt;
  }
  return SelectListSpan{list_begin, list_end};
}

std::optional<std::string> rewrite_select_list(std::string_view sql, const std::vector<std::string>& columns) {
  if (columns.empty()) return std::nullopt;
  auto span = locate_outer_select_list(sql);
  if (!span) return std::nullopt;
  std::string joined;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) joined += ", ";
    joined += columns[i];
  }
  std::string out(sql.substr(0, span->begin));
  out += ' ';
  out += joined;
  if (span->end < sql.size() && !std::isspace(static_cast<unsigned char>(sql[span->end]))) out += ' ';
  out.append(sql.substr(span->end));
  return out;
}

}  // namespace raisesql
