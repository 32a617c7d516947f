#include <cctype>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "raise/backend.hpp"
#include "raise/error.hpp"
#include "raise/protocol.hpp"

namespace raisesql {
namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path_prefix;
};

Endpoint split_url(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) throw ConfigError("invalid base_url: \"" + url + "\"");
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

std::string api_key_env_var(std::string_view backend_name) {
  std::string var = "RAISE_API_KEY_";
  for (char c : backend_name) {
    auto u = static_cast<unsigned char>(c);
    var.push_back(std::isalnum(u) ? static_cast<char>(std::toupper(u)) : '_');
  }
  return var;
}

HttpBackend::HttpBackend(std::string id, HttpProfile profile) : id_(std::move(id)), profile_(std::move(profile)) {
  split_url(profile_.base_url);
  if (profile_.model.empty()) throw ConfigError("backend " + id_ + ": model is not set");
  if (profile_.api_key.empty()) {
    if (const char* key = std::getenv(api_key_env_var(id_).c_str())) profile_.api_key = key;
  }
}

std::string HttpBackend::request_body(const CompletionRequest& req) const {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : req.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  if (req.prefill && !req.prefill->empty()) {
    if (profile_.supports_prefill) {
      messages.push_back({{"role", "assistant"}, {"content", *req.prefill}});
    } else if (!messages.empty() && messages.back()["role"] == "user") {
      // No assistant seeding: the partial answer becomes the tail of the context.
      messages.back()["content"] = messages.back()["content"].get<std::string>() +
                                   "\n\nContinue exactly where this partial answer ends:\n" + *req.prefill;
    } else {
      messages.push_back({{"role", "user"}, {"content", "Continue exactly where this partial answer ends:\n" + *req.prefill}});
    }
  }
  nlohmann::json body = {
      {"model", profile_.model},
      {"messages", std::move(messages)},
      {"max_tokens", req.max_tokens},
      {"temperature", req.temperature},
  };
  if (!req.stop_sequences.empty()) body["stop"] = req.stop_sequences;
  if (req.seed) body["seed"] = *req.seed;
  return body.dump();
}

CompletionChunk HttpBackend::parse_response(std::string_view body, const CompletionRequest& req) const {
  CompletionChunk chunk;
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    chunk.finish = FinishReason::error;
    chunk.error = "unexpected response: " + std::string(body.substr(0, 200));
    return chunk;
  }
  const auto& choice = j["choices"][0];
  if (choice.contains("message") && choice["message"].contains("content") && choice["message"]["content"].is_string()) {
    chunk.text = choice["message"]["content"].get<std::string>();
  } else if (choice.contains("text") && choice["text"].is_string()) {
    chunk.text = choice["text"].get<std::string>();
  }
  std::string finish = choice.value("finish_reason", std::string());
  if (j.contains("usage") && j["usage"].is_object() && j["usage"].contains("completion_tokens") &&
      j["usage"]["completion_tokens"].is_number_integer()) {
    chunk.token_count = j["usage"]["completion_tokens"].get<std::int64_t>();
  } else {
    chunk.token_count = approx_token_count(chunk.text);
  }

  // Some servers echo the stop sequence, most strip it.
  if (auto matched = apply_stop_sequences(chunk.text, req.stop_sequences)) {
    chunk.finish = FinishReason::stop_sequence;
    chunk.matched_stop = *matched;
    return chunk;
  }
  if (finish == "length") {
    chunk.finish = FinishReason::length;
    return chunk;
  }
  if (finish == "stop" || finish == "stop_sequence") {
    std::string reported;
    if (choice.contains("stop_reason") && choice["stop_reason"].is_string()) reported = choice["stop_reason"];
    if (j.contains("stop_sequence") && j["stop_sequence"].is_string()) reported = j["stop_sequence"];
    for (const auto& s : req.stop_sequences) {
      if (s == reported) {
        chunk.text += s;
        chunk.finish = FinishReason::stop_sequence;
        chunk.matched_stop = s;
        return chunk;
      }
    }
    // Stripped "[EXECUTE]" without a report: an open, parseable invocation
    // at the end of the text means generation halted on the tag.
    bool wants_execute = std::find(req.stop_sequences.begin(), req.stop_sequences.end(), std::string(kExecuteTag)) !=
                         req.stop_sequences.end();
    if (wants_execute) {
      std::string probe = chunk.text + std::string(kExecuteTag);
      auto span = scan_stream(probe);
      if (span && span->has_run_tag && span->tag_end == probe.size() &&
          std::holds_alternative<ToolCall>(parse_invocation(span_text(probe, *span)))) {
        chunk.text = std::move(probe);
        chunk.finish = FinishReason::stop_sequence;
        chunk.matched_stop = std::string(kExecuteTag);
        return chunk;
      }
    }
  }
  chunk.finish = FinishReason::natural;
  return chunk;
}

CompletionChunk HttpBackend::complete(const CompletionRequest& req) {
  Endpoint ep = split_url(profile_.base_url);
  httplib::Client client(ep.scheme_host_port);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(profile_.timeout).count();
  client.set_connection_timeout(std::max<long>(1, static_cast<long>(std::min<long long>(secs, 30))), 0);
  client.set_read_timeout(static_cast<time_t>(std::max<long long>(1, secs)), 0);
  client.set_write_timeout(static_cast<time_t>(std::max<long long>(1, secs)), 0);
  httplib::Headers headers;
  if (!profile_.api_key.empty()) headers.emplace("Authorization", "Bearer " + profile_.api_key);

  const std::string body = request_body(req);
  const std::string path = ep.path_prefix + "/chat/completions";
  std::string last_error;
  for (int attempt = 0; attempt <= profile_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = profile_.backoff * (1LL << (attempt - 1));
      spdlog::warn("{}: retry {}/{} in {} ms: {}", id_, attempt, profile_.max_retries, delay.count(), last_error);
      std::this_thread::sleep_for(delay);
    }
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      CompletionChunk chunk;
      chunk.finish = FinishReason::error;
      chunk.error = "authentication failed for backend " + id_ + " (HTTP " + std::to_string(res->status) +
                    "); set " + api_key_env_var(id_) + " or check the endpoint";
      return chunk;
    }
    if (retryable(res->status)) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      CompletionChunk chunk;
      chunk.finish = FinishReason::error;
      chunk.error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
      return chunk;
    }
    return parse_response(res->body, req);
  }
  CompletionChunk chunk;
  chunk.finish = FinishReason::error;
  chunk.error = "backend " + id_ + " unreachable after " + std::to_string(profile_.max_retries) + " retries: " + last_error;
  return chunk;
}

}  // namespace raisesql
