#include "raise/protocol.hpp"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>

namespace raisesql {
namespace {

std::string_view trim_view(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

char lower_char(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

// Last case-insensitive whole-word occurrence of `needle` in `hay`.
std::size_t rfind_word_ci(std::string_view hay, std::string_view needle) {
  if (needle.size() > hay.size()) return std::string_view::npos;
  for (std::size_t i = hay.size() - needle.size() + 1; i-- > 0;) {
    bool eq = true;
    for (std::size_t k = 0; k < needle.size() && eq; ++k) eq = lower_char(hay[i + k]) == needle[k];
    if (!eq) continue;
    if (i > 0 && is_ident_char(hay[i - 1])) continue;
    return i;
  }
  return std::string_view::npos;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (lower_char(s[i]) != lower_char(prefix[i])) return false;
  return true;
}

// Drops a markdown fence around the whole text.
std::string_view strip_fence(std::string_view s) {
  s = trim_view(s);
  if (s.substr(0, 3) != "```") return s;
  auto nl = s.find('\n');
  s = nl == std::string_view::npos ? s.substr(3) : s.substr(nl + 1);
  s = trim_view(s);
  if (s.size() >= 3 && s.substr(s.size() - 3) == "```") s = s.substr(0, s.size() - 3);
  return trim_view(s);
}

// Strips one pair of surrounding quotes. A single-character quote pair is
// only removed when the inner text does not use that character, so SQL like
// 'a' || 'b' survives.
std::string_view strip_quotes(std::string_view s) {
  s = trim_view(s);
  for (std::string_view q : {"\"\"\"", "'''"}) {
    if (s.size() >= 6 && s.substr(0, 3) == q && s.substr(s.size() - 3) == q) return trim_view(s.substr(3, s.size() - 6));
  }
  if (s.size() >= 2) {
    char q = s.front();
    if ((q == '"' || q == '\'' || q == '`') && s.back() == q) {
      auto inner = s.substr(1, s.size() - 2);
      if (inner.find(q) == std::string_view::npos) return trim_view(inner);
    }
  }
  return s;
}

// Removes "name=" or "name:" keyword-argument prefixes.
std::string_view strip_keyword(std::string_view s, std::string_view keyword) {
  if (!starts_with_ci(s, keyword)) return s;
  auto rest = trim_view(s.substr(keyword.size()));
  if (!rest.empty() && (rest.front() == '=' || rest.front() == ':')) return trim_view(rest.substr(1));
  return s;
}

std::vector<std::string> split_list(std::string_view body) {
  body = trim_view(body);
  if (body.size() >= 2 && ((body.front() == '[' && body.back() == ']') || (body.front() == '(' && body.back() == ')')))
    body = body.substr(1, body.size() - 2);
  std::vector<std::string> items;
  std::string cur;
  char quote = 0;
  auto flush = [&] {
    auto item = strip_quotes(cur);
    if (!item.empty()) items.emplace_back(item);
    cur.clear();
  };
  for (char c : body) {
    if (quote) {
      if (c == quote) quote = 0;
      cur.push_back(c);
    } else if (c == '"' || c == '\'' || c == '`') {
      quote = c;
      cur.push_back(c);
    } else if (c == ',') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return items;
}

Malformed malformed(std::string reason, std::string_view raw) { return Malformed{std::move(reason), std::string(raw)}; }

}  // namespace

std::optional<InvocationSpan> scan_stream(std::string_view text) {
  auto exec = text.find(kExecuteTag);
  if (exec == std::string_view::npos) return std::nullopt;
  std::string_view before = text.substr(0, exec);
  InvocationSpan span;
  span.end = exec;
  span.tag_end = exec + kExecuteTag.size();
  auto run = before.rfind(kRunTag);
  if (run != std::string_view::npos) {
    span.begin = run + kRunTag.size();
    span.has_run_tag = true;
    return span;
  }
  std::size_t best = std::string_view::npos;
  for (Tool t : kAllTools) {
    auto pos = rfind_word_ci(before, tool_name(t));
    if (pos != std::string_view::npos && (best == std::string_view::npos || pos > best)) best = pos;
  }
  if (best == std::string_view::npos) {
    auto nl = before.rfind('\n');
    best = nl == std::string_view::npos ? 0 : nl + 1;
  }
  span.begin = best;
  return span;
}

std::string span_text(std::string_view text, const InvocationSpan& span) {
  return std::string(trim_view(text.substr(span.begin, span.end - span.begin)));
}

std::vector<ScanEvent> scan_events(std::string_view text) {
  std::vector<ScanEvent> events;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto span = scan_stream(text.substr(pos));
    if (!span) break;
    InvocationSpan abs{span->begin + pos, span->end + pos, span->tag_end + pos, span->has_run_tag};
    std::size_t start = abs.has_run_tag ? abs.begin - kRunTag.size() : abs.begin;
    if (start > pos) events.emplace_back(TextChunk{std::string(text.substr(pos, start - pos))});
    events.emplace_back(Invocation{abs, span_text(text, abs)});
    pos = abs.tag_end;
  }
  if (pos < text.size()) events.emplace_back(TextChunk{std::string(text.substr(pos))});
  return events;
}

ParseOutcome parse_invocation(std::string_view raw) {
  std::string_view s = trim_view(raw);
  if (s.substr(0, kRunTag.size()) == kRunTag) s = trim_view(s.substr(kRunTag.size()));
  if (s.substr(0, 3) == "```") {
    s = strip_fence(s);
  } else if (s.size() >= 2 && s.front() == '`' && s.back() == '`') {
    s = trim_view(s.substr(1, s.size() - 2));
  }

  std::size_t name_len = 0;
  while (name_len < s.size() && is_ident_char(s[name_len])) ++name_len;
  if (name_len == 0) return malformed("missing tool name", raw);
  std::string_view name = s.substr(0, name_len);
  auto tool = tool_from_name(name);
  if (!tool) return malformed(fmt::format("unknown tool {}", name), raw);

  std::string_view rest = trim_view(s.substr(name_len));
  if (tool_arity(*tool) == 0) {
    if (rest.empty()) return ToolCall{*tool, {}};
    if (rest.front() == '(' && rest.back() == ')' && trim_view(rest.substr(1, rest.size() - 2)).empty())
      return ToolCall{*tool, {}};
    return malformed(fmt::format("{} takes no arguments", name), raw);
  }

  if (rest.empty() || rest.front() != '(') {
    if (*tool == Tool::run_query) return malformed("empty query", raw);
    return malformed(fmt::format("expected '(' after {}", name), raw);
  }
  auto close = rest.rfind(')');
  std::string_view body = close == 0 || close == std::string_view::npos ? rest.substr(1) : rest.substr(1, close - 1);
  body = trim_view(body);

  switch (*tool) {
    case Tool::run_query: {
      body = strip_keyword(body, "sql");
      body = strip_quotes(strip_fence(body));
      if (body.empty()) return malformed("empty query", raw);
      return ToolCall::query(std::string(body));
    }
    case Tool::read_table_columns: {
      body = strip_quotes(strip_keyword(body, "table_name"));
      if (body.empty()) return malformed("empty table name", raw);
      return ToolCall::table_columns(std::string(body));
    }
    case Tool::read_columns_documentation:
      return ToolCall::columns_documentation(split_list(strip_keyword(body, "column_names")));
    case Tool::read_table_names: break;
  }
  return malformed("unreachable", raw);
}

std::string render_invocation(const ToolCall& call) {
  std::string out(tool_name(call.tool));
  out += '(';
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    if (i) out += ", ";
    if (const auto* s = std::get_if<std::string>(&call.args[i])) {
      out += *s;
    } else {
      const auto& list = std::get<std::vector<std::string>>(call.args[i]);
      out += '[';
      for (std::size_t k = 0; k < list.size(); ++k) {
        if (k) out += ", ";
        out += '"' + list[k] + '"';
      }
      out += ']';
    }
  }
  out += ')';
  return out;
}

std::string render_tagged(const ToolCall& call) {
  return fmt::format("{} {} {}", kRunTag, render_invocation(call), kExecuteTag);
}

std::string malformed_feedback(const Malformed& m) { return "could not parse command: " + m.reason; }

namespace {

struct Fence {
  std::string label;
  std::string content;
};

std::vector<Fence> find_fences(std::string_view text) {
  std::vector<Fence> fences;
  std::size_t pos = 0;
  while (true) {
    auto open = text.find("```", pos);
    if (open == std::string_view::npos) break;
    auto label_end = text.find('\n', open + 3);
    if (label_end == std::string_view::npos) break;
    Fence f;
    f.label = std::string(trim_view(text.substr(open + 3, label_end - open - 3)));
    auto close = text.find("```", label_end + 1);
    auto content_end = close == std::string_view::npos ? text.size() : close;
    f.content = std::string(trim_view(text.substr(label_end + 1, content_end - label_end - 1)));
    fences.push_back(std::move(f));
    if (close == std::string_view::npos) break;
    pos = close + 3;
  }
  return fences;
}

bool line_starts_statement(std::string_view line) {
  line = trim_view(line);
  for (std::string_view kw : {"SELECT", "select", "WITH", "with"}) {
    if (line.substr(0, kw.size()) == kw && (line.size() == kw.size() || std::isspace(static_cast<unsigned char>(line[kw.size()]))))
      return true;
  }
  return false;
}

}  // namespace

std::optional<std::string> extract_final_sql(std::string_view transcript) {
  auto fences = find_fences(transcript);
  for (auto it = fences.rbegin(); it != fences.rend(); ++it) {
    std::string label = it->label;
    std::transform(label.begin(), label.end(), label.begin(), lower_char);
    if ((label == "sql" || label == "sqlite") && !it->content.empty()) return it->content;
  }
  for (auto it = fences.rbegin(); it != fences.rend(); ++it) {
    if (!it->content.empty()) return it->content;
  }

  std::optional<std::string> last;
  std::size_t pos = 0;
  while (pos < transcript.size()) {
    auto nl = transcript.find('\n', pos);
    std::size_t line_end = nl == std::string_view::npos ? transcript.size() : nl;
    std::string_view line = transcript.substr(pos, line_end - pos);
    if (!line_starts_statement(line)) {
      pos = line_end + 1;
      continue;
    }
    // Statement runs to the first ';' or blank line.
    std::size_t end = pos;
    std::size_t cursor = pos;
    while (cursor < transcript.size()) {
      auto next_nl = transcript.find('\n', cursor);
      std::size_t le = next_nl == std::string_view::npos ? transcript.size() : next_nl;
      std::string_view l = transcript.substr(cursor, le - cursor);
      if (cursor != pos && trim_view(l).empty()) break;
      auto semi = l.find(';');
      if (semi != std::string_view::npos) {
        end = cursor + semi + 1;
        cursor = le + 1;
        break;
      }
      end = le;
      cursor = le + 1;
    }
    auto stmt = trim_view(transcript.substr(pos, end - pos));
    if (!stmt.empty()) last = std::string(stmt);
    pos = std::max(cursor, pos + 1);
  }
  return last;
}

}  // namespace raisesql
