#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace raisesql::detail {

enum class TokKind { word, number, string, quoted_ident, punct, space, comment };

struct Tok {
  TokKind kind;
  std::size_t begin;
  std::size_t end;
};

// Lexes SQLite-flavoured SQL. Total: unterminated strings and comments run to
// the end of input.
std::vector<Tok> lex_sql(std::string_view sql);

inline bool is_trivia(const Tok& t) { return t.kind == TokKind::space || t.kind == TokKind::comment; }

bool word_is(std::string_view sql, const Tok& t, std::string_view keyword);

}  // namespace raisesql::detail
