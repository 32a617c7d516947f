#include "raise/backend.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "raise/error.hpp"

namespace raisesql {
namespace {

// Keeps the first `words` whitespace-delimited words, with their spacing.
std::string first_words(std::string_view text, std::int64_t words) {
  std::int64_t seen = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
    if (!space && !in_word) {
      if (seen == words) {
        auto end = i;
        while (end > 0 && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
        return std::string(text.substr(0, end));
      }
      ++seen;
    }
    in_word = !space;
  }
  return std::string(text);
}

bool matches(const TapeEntry& e, const std::string& content) {
  for (const auto& m : e.matchers)
    if (content.find(m) == std::string::npos) return false;
  return true;
}

}  // namespace

ScriptedBackend::ScriptedBackend(std::string id, std::vector<TapeEntry> tape)
    : id_(std::move(id)), tape_(std::move(tape)), consumed_(tape_.size(), false) {
  if (tape_.empty()) throw ConfigError("scripted backend " + id_ + ": tape is empty");
}

CompletionChunk ScriptedBackend::complete(const CompletionRequest& req) {
  std::lock_guard lock(mu_);
  log_.push_back(req);
  const std::string content = req.flattened();

  std::optional<std::size_t> pick;
  for (std::size_t i = 0; i < tape_.size() && !pick; ++i) {
    if (!tape_[i].matchers.empty() && !consumed_[i] && matches(tape_[i], content)) pick = i;
  }
  for (std::size_t i = 0; i < tape_.size() && !pick; ++i) {
    if (tape_[i].matchers.empty() && !consumed_[i]) pick = i;
  }
  CompletionChunk chunk;
  if (!pick) {
    chunk.finish = FinishReason::error;
    chunk.error = "scripted tape exhausted (" + id_ + ")";
    return chunk;
  }
  const TapeEntry& entry = tape_[*pick];
  if (!entry.repeat) consumed_[*pick] = true;

  chunk.text = entry.response;
  auto matched = apply_stop_sequences(chunk.text, req.stop_sequences);
  chunk.token_count = entry.token_count && !matched ? *entry.token_count : approx_token_count(chunk.text);
  if (chunk.token_count > req.max_tokens) {
    if (!entry.token_count) chunk.text = first_words(chunk.text, std::max<std::int64_t>(req.max_tokens, 0) * 10 / 13);
    chunk.token_count = entry.token_count ? req.max_tokens : approx_token_count(chunk.text);
    chunk.finish = FinishReason::length;
    return chunk;
  }
  if (matched) {
    chunk.finish = FinishReason::stop_sequence;
    chunk.matched_stop = *matched;
  } else {
    chunk.finish = FinishReason::natural;
  }
  return chunk;
}

std::size_t ScriptedBackend::calls() const {
  std::lock_guard lock(mu_);
  return log_.size();
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mu_);
  std::size_t n = 0;
  for (std::size_t i = 0; i < tape_.size(); ++i) n += (!consumed_[i] || tape_[i].repeat) ? 1 : 0;
  return n;
}

std::vector<CompletionRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return log_;
}

std::vector<TapeEntry> parse_tape(std::string_view text) {
  std::vector<TapeEntry> tape;
  std::vector<std::string> lines;
  {
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto nl = text.find('\n', pos);
      if (nl == std::string_view::npos) {
        if (pos < text.size()) lines.emplace_back(text.substr(pos));
        break;
      }
      lines.emplace_back(text.substr(pos, nl - pos));
      pos = nl + 1;
    }
  }
  for (auto& l : lines)
    if (!l.empty() && l.back() == '\r') l.pop_back();

  TapeEntry cur;
  bool in_directives = true;
  bool has_body = false;
  std::string body;
  auto flush = [&] {
    if (has_body || !cur.matchers.empty() || cur.repeat) {
      cur.response = body;
      tape.push_back(std::move(cur));
    }
    cur = TapeEntry{};
    body.clear();
    in_directives = true;
    has_body = false;
  };
  for (const auto& line : lines) {
    if (line == "---") {
      flush();
      continue;
    }
    if (in_directives && line.rfind("@@", 0) != 0 && line.rfind('@', 0) == 0) {
      if (line.rfind("@match ", 0) == 0) {
        cur.matchers.push_back(line.substr(7));
      } else if (line == "@repeat") {
        cur.repeat = true;
      } else if (line.rfind("@tokens ", 0) == 0) {
        cur.token_count = std::stoll(line.substr(8));
      } else {
        throw ConfigError("tape: unknown directive " + line);
      }
      continue;
    }
    bool escaped = in_directives && line.rfind("@@", 0) == 0;
    in_directives = false;
    if (has_body) body += '\n';
    body += escaped ? line.substr(1) : line;
    has_body = true;
  }
  flush();
  return tape;
}

std::vector<TapeEntry> load_tape(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read tape " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_tape(ss.str());
}

std::string format_tape(const std::vector<TapeEntry>& tape) {
  std::string out;
  for (std::size_t i = 0; i < tape.size(); ++i) {
    if (i) out += "---\n";
    const auto& e = tape[i];
    for (const auto& m : e.matchers) out += "@match " + m + "\n";
    if (e.repeat) out += "@repeat\n";
    if (e.token_count) out += "@tokens " + std::to_string(*e.token_count) + "\n";
    std::size_t pos = 0;
    std::string_view body = e.response;
    bool first = true;
    while (pos <= body.size()) {
      auto nl = body.find('\n', pos);
      auto line = body.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      if (first && !line.empty() && line.front() == '@') out += '@';
      out += line;
      out += '\n';
      first = false;
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
  }
  return out;
}

}  // namespace raisesql
