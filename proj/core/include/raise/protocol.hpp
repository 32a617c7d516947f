#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "raise/types.hpp"

namespace raisesql {

inline constexpr std::string_view kRunTag = "[RUN]";
inline constexpr std::string_view kExecuteTag = "[EXECUTE]";

/// Character offsets into the scanned text.
struct InvocationSpan {
  std::size_t begin = 0;      // first byte of the invocation text
  std::size_t end = 0;        // one past the last byte, before "[EXECUTE]"
  std::size_t tag_end = 0;    // one past "[EXECUTE]"
  bool has_run_tag = false;

  bool operator==(const InvocationSpan&) const = default;
};

/// Finds the first complete invocation: the text between the last "[RUN]"
/// preceding the first "[EXECUTE]" and that "[EXECUTE]". Without a "[RUN]",
/// the span starts at the nearest preceding tool name, or at the start of the
/// line. The returned span is stable under any extension of `text`.
std::optional<InvocationSpan> scan_stream(std::string_view text);

/// Trimmed invocation text for a span.
std::string span_text(std::string_view text, const InvocationSpan& span);

struct TextChunk {
  std::string text;
  bool operator==(const TextChunk&) const = default;
};
struct Invocation {
  InvocationSpan span;
  std::string raw;
  bool operator==(const Invocation&) const = default;
};
using ScanEvent = std::variant<TextChunk, Invocation>;

/// Splits a whole transcript into prose and invocations, in order.
std::vector<ScanEvent> scan_events(std::string_view text);

struct Malformed {
  std::string reason;
  std::string raw;
  bool operator==(const Malformed&) const = default;
};
using ParseOutcome = std::variant<ToolCall, Malformed>;

ParseOutcome parse_invocation(std::string_view raw);

/// "name(args)" for the call.
std::string render_invocation(const ToolCall& call);
/// "[RUN] name(args) [EXECUTE]".
std::string render_tagged(const ToolCall& call);

/// Feedback text for an invocation that could not be parsed.
std::string malformed_feedback(const Malformed& m);

/// Last ```sql fence, else last fence of any label, else the last statement
/// that starts a line with SELECT or WITH.
std::optional<std::string> extract_final_sql(std::string_view transcript);

}  // namespace raisesql
