#pragma once

// Semantic sampler backed by an OpenAI-compatible chat-completions endpoint
// (for example a locally hosted model server).

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "adaptfuse/aggregation.hpp"

namespace adaptfuse {

struct HttpSamplerConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string model = "local-model";
  std::string api_key;  // empty: no Authorization header
  std::string item_noun = "Item";
  int max_tokens = 256;
  double timeout_seconds = 30.0;
  int retries = 2;  // extra attempts after the first
  int backoff_ms = 250;

  /// Fills api_key from ADAPTFUSE_API_KEY when it is not set explicitly.
  void load_api_key_from_env() {
    if (!api_key.empty()) return;
    if (const char* k = std::getenv("ADAPTFUSE_API_KEY")) api_key = k;
  }
};

struct ChatMessage {
  std::string role;
  std::string content;
};

/// Chat transcript for one sample: the task framing, every past round with
/// the user's choice, the current options, a reasoning hint, and the
/// required answer-line format.
inline std::vector<ChatMessage> build_messages(const SamplerQuery& q, const std::string& noun) {
  std::string lower_noun = noun;
  for (char& c : lower_noun) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));

  std::string system =
      "You recommend " + lower_noun + "s to a user whose preferences are fixed but unknown to you. "
      "Infer them from the choices the user has made so far and pick the option they are most likely to prefer.";

  std::string user;
  std::size_t t = 1;
  for (const auto& r : q.history) {
    user += "Round " + std::to_string(t++) + " " + noun + " options:\n";
    for (const auto& text : r.options.raw_texts()) user += text + "\n";
    user += "User choice: " + noun + " " + std::to_string(r.chosen + 1) + "\n\n";
  }
  user += "Round " + std::to_string(t) + " " + noun + " options:\n";
  for (const auto& text : q.options.raw_texts()) user += text + "\n";
  user += "\nHint: " + q.hint + ".\n";
  user += "Reason briefly, then finish with exactly one line of the form\n"
          "ANSWER: <option number> CONFIDENCE: <probability between 0 and 1>";
  return {{"system", std::move(system)}, {"user", std::move(user)}};
}

inline nlohmann::json chat_request_body(const std::string& model, const std::vector<ChatMessage>& messages,
                                        double temperature, int max_tokens) {
  nlohmann::json msgs = nlohmann::json::array();
  for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  return {{"model", model}, {"messages", msgs}, {"temperature", temperature}, {"max_tokens", max_tokens}};
}

/// choices[0].message.content, or nullopt when the body does not have it.
inline std::optional<std::string> extract_content(const std::string& body) {
  const auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  try {
    const auto& c = j.at("choices").at(0).at("message").at("content");
    if (!c.is_string()) return std::nullopt;
    return c.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

class HttpChatSampler final : public SemanticSampler {
 public:
  explicit HttpChatSampler(HttpSamplerConfig cfg) : cfg_(std::move(cfg)) { cfg_.load_api_key_from_env(); }

  std::optional<std::string> complete(const SamplerQuery& q) override {
    const auto body = chat_request_body(cfg_.model, build_messages(q, cfg_.item_noun), q.temperature,
                                        cfg_.max_tokens)
                          .dump();
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);

    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.backoff_ms * attempt));
      httplib::Client cli(cfg_.base_url);
      const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
      const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
      cli.set_connection_timeout(secs, usecs);
      cli.set_read_timeout(secs, usecs);
      cli.set_write_timeout(secs, usecs);
      auto res = cli.Post("/v1/chat/completions", headers, body, "application/json");
      if (!res) continue;
      if (res->status == 429 || res->status >= 500) continue;
      if (res->status != 200) return std::nullopt;
      return extract_content(res->body);
    }
    return std::nullopt;
  }

  bool concurrent_calls() const override { return true; }
  const HttpSamplerConfig& config() const { return cfg_; }

 private:
  HttpSamplerConfig cfg_;
};

}  // namespace adaptfuse
