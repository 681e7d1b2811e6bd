// Copyright 2026 the streamprofile authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
// <resolv.h>, reached through httplib, defines _res as a macro that breaks
// Eigen's product kernels.
#ifdef _res
#undef _res
#endif

#include "streamprofile/core.hpp"

namespace streamprofile::chat {

struct Message {
  std::string role;
  std::string content;
};

struct ModelClientConfig {
  std::string endpoint;  // base URL, e.g. http://localhost:8000/v1
  std::string model;
  std::string api_key;
  double temperature = 0.0;
  int max_tokens = 5120;
  bool json_mode = true;  // request {"type": "json_object"} output
  int timeout_seconds = 120;
  int max_retries = 3;
  int max_in_flight = 4;
  int backoff_ms = 500;
};

inline void to_json(Json& j, const ModelClientConfig& c) {
  // api_key is never serialized.
  j = Json{{"endpoint", c.endpoint},       {"model", c.model},
           {"temperature", c.temperature}, {"max_tokens", c.max_tokens},
           {"json_mode", c.json_mode},     {"timeout_seconds", c.timeout_seconds},
           {"max_retries", c.max_retries}, {"max_in_flight", c.max_in_flight}};
}

inline ModelClientConfig client_config_from_json(const Json& j) {
  ModelClientConfig c;
  streamprofile::detail::get_opt(j, "endpoint", c.endpoint);
  streamprofile::detail::get_opt(j, "model", c.model);
  streamprofile::detail::get_opt(j, "max_tokens", c.max_tokens);
  streamprofile::detail::get_opt(j, "json_mode", c.json_mode);
  streamprofile::detail::get_opt(j, "timeout_seconds", c.timeout_seconds);
  streamprofile::detail::get_opt(j, "max_retries", c.max_retries);
  streamprofile::detail::get_opt(j, "max_in_flight", c.max_in_flight);
  streamprofile::detail::get_opt(j, "backoff_ms", c.backoff_ms);
  if (j.contains("temperature") && j["temperature"].get<double>() != 0.0) {
    throw InvalidInput("benchmark runs require temperature 0.0");
  }
  if (c.max_retries < 0 || c.max_in_flight < 1) throw InvalidInput("bad retry/in-flight bounds");
  return c;
}

enum class FailureKind { transient, unreachable, auth };

class TransportError : public Error {
 public:
  TransportError(FailureKind kind, const std::string& what) : Error(what), kind_(kind) {}
  FailureKind kind() const { return kind_; }

 private:
  FailureKind kind_;
};

class Client {
 public:
  virtual ~Client() = default;
  // One chat completion. Throws TransportError on failure.
  virtual std::string complete(const std::vector<Message>& messages, const ModelClientConfig& cfg) = 0;
};

// OpenAI-compatible /chat/completions client.
class HttpClient final : public Client {
 public:
  std::string complete(const std::vector<Message>& messages, const ModelClientConfig& cfg) override {
    auto [origin, base] = split_endpoint(cfg.endpoint);
    httplib::Client cli(origin);
    cli.set_connection_timeout(std::chrono::seconds(cfg.timeout_seconds));
    cli.set_read_timeout(std::chrono::seconds(cfg.timeout_seconds));
    cli.set_write_timeout(std::chrono::seconds(cfg.timeout_seconds));
    httplib::Headers headers;
    if (!cfg.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg.api_key);

    Json body{{"model", cfg.model}, {"temperature", cfg.temperature}, {"max_tokens", cfg.max_tokens}};
    body["messages"] = Json::array();
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    if (cfg.json_mode) body["response_format"] = {{"type", "json_object"}};

    auto res = cli.Post(base + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) {
      auto err = res.error();
      if (err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout) {
        throw TransportError(FailureKind::unreachable, "endpoint unreachable: " + httplib::to_string(err));
      }
      throw TransportError(FailureKind::transient, "transport failure: " + httplib::to_string(err));
    }
    if (res->status == 401 || res->status == 403) {
      throw TransportError(FailureKind::auth, "authentication rejected (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransportError(FailureKind::transient, "HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      throw TransportError(FailureKind::auth, "request rejected (HTTP " + std::to_string(res->status) + ")");
    }
    try {
      auto j = Json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
      throw TransportError(FailureKind::transient, std::string("malformed completion envelope: ") + e.what());
    }
  }

  static std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) throw InvalidInput("endpoint must include a scheme: " + endpoint);
    auto path = endpoint.find('/', scheme + 3);
    if (path == std::string::npos) return {endpoint, ""};
    std::string base = endpoint.substr(path);
    while (!base.empty() && base.back() == '/') base.pop_back();
    return {endpoint.substr(0, path), base};
  }
};

struct CallOutcome {
  std::optional<std::string> response;
  int attempts = 0;
  std::string error;
};

/// Single completion with exponential backoff on transient failures.
/// Exhausted retries yield an empty response (the caller records a failed
/// step); auth failures and a persistently unreachable endpoint throw
/// RemoteError.
inline CallOutcome call_model(Client& client, const std::vector<Message>& messages,
                              const ModelClientConfig& cfg) {
  CallOutcome out;
  FailureKind last = FailureKind::transient;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    ++out.attempts;
    try {
      out.response = client.complete(messages, cfg);
      out.error.clear();
      return out;
    } catch (const TransportError& e) {
      if (e.kind() == FailureKind::auth) throw RemoteError(e.what());
      last = e.kind();
      out.error = e.what();
    }
    if (attempt < cfg.max_retries && cfg.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(cfg.backoff_ms << attempt));
    }
  }
  if (last == FailureKind::unreachable) throw RemoteError(out.error);
  return out;
}

/// Removes every "```json" and "```" marker, then trims surrounding whitespace.
inline std::string strip_code_fences(std::string_view raw) {
  std::string s(raw);
  for (std::string_view marker : {std::string_view("```json"), std::string_view("```")}) {
    for (auto pos = s.find(marker); pos != std::string::npos; pos = s.find(marker, pos)) {
      s.erase(pos, marker.size());
    }
  }
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Client that replays a scripted sequence of outcomes; used for offline runs
/// and fault injection.
class ScriptedClient final : public Client {
 public:
  using Step = std::function<std::string(const std::vector<Message>&)>;

  explicit ScriptedClient(std::vector<Step> steps) : steps_(std::move(steps)) {}

  std::string complete(const std::vector<Message>& messages, const ModelClientConfig&) override {
    if (steps_.empty()) throw TransportError(FailureKind::transient, "script exhausted");
    auto idx = std::min(calls_, steps_.size() - 1);
    ++calls_;
    return steps_[idx](messages);
  }

  std::size_t calls() const { return calls_; }

 private:
  std::vector<Step> steps_;
  std::size_t calls_ = 0;
};

inline std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

}  // namespace streamprofile::chat
