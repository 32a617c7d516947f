#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace raisesql {

/// Byte range of the outermost select-list: from just after
/// SELECT [DISTINCT|ALL] to just before the outermost FROM (or whatever
/// clause or end of statement follows when there is no FROM).
struct SelectListSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Skips a leading WITH clause and redundant outer parentheses. Returns
/// nullopt for non-SELECT statements and for compound selects (UNION,
/// INTERSECT, EXCEPT at the outermost level), where replacing one list
/// would change the query.
std::optional<SelectListSpan> locate_outer_select_list(std::string_view sql);

/// Replaces the outermost select-list with `columns`, leaving every other
/// byte untouched.
std::optional<std::string> rewrite_select_list(std::string_view sql, const std::vector<std::string>& columns);

}  // namespace raisesql
