#include "raise/backend.hpp"

#include <cctype>

namespace raisesql {

std::string CompletionRequest::flattened() const {
  std::string out;
  for (const auto& m : messages) {
    out += m.content;
    out += '\n';
  }
  if (prefill) out += *prefill;
  return out;
}

std::string_view to_string(FinishReason f) {
  switch (f) {
    case FinishReason::stop_sequence: return "stop_sequence";
    case FinishReason::length: return "length";
    case FinishReason::natural: return "natural";
    case FinishReason::error: break;
  }
  return "error";
}

std::int64_t approx_token_count(std::string_view text) {
  std::int64_t words = 0;
  bool in_word = false;
  for (char c : text) {
    bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return (words * 13 + 9) / 10;
}

std::optional<std::string> apply_stop_sequences(std::string& text, const std::vector<std::string>& stops) {
  std::size_t best = std::string::npos;
  const std::string* match = nullptr;
  for (const auto& s : stops) {
    if (s.empty()) continue;
    auto pos = text.find(s);
    if (pos == std::string::npos) continue;
    if (pos < best || (pos == best && s.size() > match->size())) {
      best = pos;
      match = &s;
    }
  }
  if (!match) return std::nullopt;
  text.resize(best + match->size());
  return *match;
}

}  // namespace raisesql
