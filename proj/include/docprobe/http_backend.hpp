// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The docprobe Authors

#pragma once

// Chat-completion backend over HTTP(S). Kept out of llm_gateway.hpp so that
// only targets that talk to the network pull in httplib and libssl.

#include <cstdlib>
#include <memory>
#include <string>
#include <thread>

#include "docprobe/error.hpp"
#include "docprobe/llm_gateway.hpp"
#include "httplib.h"
#include "json.hpp"

namespace docprobe {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint must be an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(BackendConfig config) : config_(std::move(config)) {}

  std::string complete(const PromptBundle& prompt) override {
    const char* key = config_.api_key_env.empty() ? nullptr : std::getenv(config_.api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw Error(ErrorCode::BackendUnavailable, "environment variable " + config_.api_key_env + " is not set");
    }
    const auto url = split_url(config_.endpoint);
    const nlohmann::json body = {
        {"model", config_.model_name},
        {"messages",
         {{{"role", "system"}, {"content", prompt.system_text}},
          {{"role", "user"}, {"content", prompt.user_text}}}},
        {"temperature", config_.temperature}};
    const std::string payload = body.dump();

    httplib::Client client(url.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    const httplib::Headers headers = {{"Authorization", std::string("Bearer ") + key}};

    auto delay = config_.backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      auto res = client.Post(url.path, headers, payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw Error(ErrorCode::BackendUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body);
      }
      return extract_content(res->body);
    }
    throw Error(ErrorCode::RateLimited, last_error + " after " + std::to_string(config_.max_retries) + " retries");
  }

  /// Text of the first choice in a chat-completion response.
  static std::string extract_content(const std::string& body) {
    try {
      const auto doc = nlohmann::json::parse(body);
      return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BackendUnavailable, std::string("malformed completion response: ") + e.what());
    }
  }

 private:
  BackendConfig config_;
};

inline std::unique_ptr<CompletionBackend> make_backend(const BackendConfig& config) {
  config.validate();
  if (config.kind == BackendKind::Http) return std::make_unique<HttpBackend>(config);
  return std::make_unique<MockBackend>(config.fixture_dir, config.dump_missing_prompts);
}

}  // namespace docprobe
