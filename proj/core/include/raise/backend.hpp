#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace raisesql {

struct ChatMessage {
  std::string role;  // system, user, assistant
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  // Assistant text the completion continues from.
  std::optional<std::string> prefill;
  std::vector<std::string> stop_sequences;
  std::int64_t max_tokens = 4096;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;

  /// All message contents and the prefill, joined by newlines.
  std::string flattened() const;
};

enum class FinishReason { stop_sequence, length, natural, error };

struct CompletionChunk {
  std::string text;
  std::int64_t token_count = 0;
  FinishReason finish = FinishReason::natural;
  std::string matched_stop;  // set when finish == stop_sequence
  std::string error;         // set when finish == error
};

std::string_view to_string(FinishReason f);

/// ceil(words * 1.3), words split on whitespace.
std::int64_t approx_token_count(std::string_view text);

/// Cuts `text` at the earliest stop sequence (keeping the match).
/// Returns the matched sequence, if any.
std::optional<std::string> apply_stop_sequences(std::string& text, const std::vector<std::string>& stops);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const std::string& id() const = 0;
  virtual CompletionChunk complete(const CompletionRequest& req) = 0;
};

// ---------------------------------------------------------------------------

struct TapeEntry {
  std::string response;
  // Every substring must occur in the flattened request. Empty = FIFO entry.
  std::vector<std::string> matchers;
  // Repeating entries are never consumed.
  bool repeat = false;
  // Overrides the word-count approximation.
  std::optional<std::int64_t> token_count;
};

/// Deterministic backend replaying canned responses. Matching entries take
/// priority (first in tape order); otherwise the next unconsumed FIFO entry
/// is used. Stop sequences and max_tokens are applied to the response.
class ScriptedBackend final : public Backend {
 public:
  ScriptedBackend(std::string id, std::vector<TapeEntry> tape);

  const std::string& id() const override { return id_; }
  CompletionChunk complete(const CompletionRequest& req) override;

  std::size_t calls() const;
  std::size_t remaining() const;
  std::vector<CompletionRequest> requests() const;

 private:
  std::string id_;
  std::vector<TapeEntry> tape_;
  std::vector<bool> consumed_;
  std::vector<CompletionRequest> log_;
  mutable std::mutex mu_;
};

/// Text tape format. Entries are separated by lines consisting of "---".
/// Leading directive lines per entry: "@match <substring>" (repeatable),
/// "@repeat", "@tokens <n>". A literal leading '@' is written as "@@".
std::vector<TapeEntry> parse_tape(std::string_view text);
std::vector<TapeEntry> load_tape(const std::filesystem::path& path);
std::string format_tape(const std::vector<TapeEntry>& tape);

// ---------------------------------------------------------------------------

struct HttpProfile {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;   // resolved from the environment if empty
  bool supports_prefill = false;
  std::chrono::milliseconds timeout{120'000};
  int max_retries = 3;
  std::chrono::milliseconds backoff{1'000};
};

/// Environment variable holding the key for a backend name:
/// RAISE_API_KEY_<NAME>, upper-cased, non-alphanumerics as '_'.
std::string api_key_env_var(std::string_view backend_name);

/// Chat-completions client (model, messages, stop, max_tokens, temperature,
/// seed). Transport failures, 429 and 5xx are retried with exponential
/// backoff; 401/403 fail immediately.
class HttpBackend final : public Backend {
 public:
  HttpBackend(std::string id, HttpProfile profile);

  const std::string& id() const override { return id_; }
  CompletionChunk complete(const CompletionRequest& req) override;

  /// Wire body for a request (exposed for tests).
  std::string request_body(const CompletionRequest& req) const;
  /// Interprets a response body. `req` is needed to restore stop sequences
  /// that the server strips.
  CompletionChunk parse_response(std::string_view body, const CompletionRequest& req) const;

 private:
  std::string id_;
  HttpProfile profile_;
};

}  // namespace raisesql
