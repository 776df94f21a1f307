#pragma once

#include <chrono>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "kurosawa/error.hpp"
#include "kurosawa/generation.hpp"

namespace kurosawa {

struct LiveBackendConfig {
  std::string url;  // http://host[:port]/path
  std::string token;
  std::string model_ref;
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{60000};

  /// KUROSAWA_BACKEND_URL, KUROSAWA_BACKEND_TOKEN, KUROSAWA_MODEL_REF.
  static LiveBackendConfig from_env() { return from_env(LiveBackendConfig{}); }
  static LiveBackendConfig from_env(LiveBackendConfig base) {
    if (const char* v = std::getenv("KUROSAWA_BACKEND_URL")) base.url = v;
    if (const char* v = std::getenv("KUROSAWA_BACKEND_TOKEN")) base.token = v;
    if (const char* v = std::getenv("KUROSAWA_MODEL_REF")) base.model_ref = v;
    return base;
  }
};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

inline ParsedUrl parse_http_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "backend URL lacks a scheme", {{"url", url}});
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http") {
    throw Error(ErrorCode::InvalidConfig, "only http:// backend URLs are supported in this build", {{"url", url}});
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  if (out.origin.size() <= scheme_end + 3) throw Error(ErrorCode::InvalidConfig, "backend URL lacks a host", {{"url", url}});
  return out;
}

/// JSON-over-HTTP completion client. The request body carries prompt,
/// sampling settings, stop list and a logprobs flag; the reply is read from
/// choices[0].text, choices[0].finish_reason and
/// choices[0].logprobs.token_logprobs.
class LiveBackend : public CompletionBackend {
 public:
  explicit LiveBackend(LiveBackendConfig cfg) : cfg_(std::move(cfg)), url_(parse_http_url(cfg_.url)) {}

  std::string identity() const override { return "live:" + cfg_.url; }
  BackendCapabilities capabilities() const override { return {true}; }

  static nlohmann::json request_body(const std::string& prompt, const GenerationConfig& config,
                                     const std::string& model) {
    nlohmann::json body{{"model", model},
                        {"prompt", prompt},
                        {"temperature", config.temperature},
                        {"top_p", config.top_p},
                        {"frequency_penalty", config.frequency_penalty},
                        {"presence_penalty", config.presence_penalty},
                        {"max_tokens", config.max_tokens},
                        {"stop", config.stop}};
    if (config.logprobs) body["logprobs"] = 1;
    return body;
  }

  BackendReply complete_once(const std::string& prompt, const GenerationConfig& config) const override {
    auto client = make_client();
    httplib::Headers headers;
    if (!cfg_.token.empty()) headers.emplace("Authorization", "Bearer " + cfg_.token);
    const auto model = config.model_ref.empty() ? cfg_.model_ref : config.model_ref;
    const auto body = request_body(prompt, config, model).dump();
    auto res = client.Post(url_.path, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      const auto msg = httplib::to_string(err);
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
        throw Error(ErrorCode::Timeout, "backend timed out: " + msg);
      }
      throw Error(ErrorCode::BackendUnavailable, "backend transport failure: " + msg, {{"cause", msg}});
    }
    if (res->status == 429 || res->status >= 500) {
      throw Error(ErrorCode::BackendUnavailable, "backend temporarily unavailable",
                  {{"status", res->status}, {"body", res->body.substr(0, 200)}});
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::BackendRejected, "backend rejected the request",
                  {{"status", res->status}, {"message", res->body.substr(0, 200)}});
    }
    return parse_reply(res->body);
  }

  static BackendReply parse_reply(const std::string& body) {
    try {
      const auto j = nlohmann::json::parse(body);
      const auto& choice = j.at("choices").at(0);
      BackendReply r;
      r.text = choice.at("text").get<std::string>();
      r.hit_max_tokens = choice.value("finish_reason", std::string{}) == "length";
      if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
          choice["logprobs"].contains("token_logprobs")) {
        std::vector<double> lps;
        for (const auto& v : choice["logprobs"]["token_logprobs"]) {
          if (v.is_number()) lps.push_back(v.get<double>());
        }
        r.token_logprobs = std::move(lps);
      }
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BackendRejected, std::string("malformed backend response: ") + e.what(),
                  {{"status", 200}, {"message", "malformed response"}});
    }
  }

  bool reachable() const override {
    auto client = make_client();
    client.set_connection_timeout(std::chrono::milliseconds(1000));
    auto res = client.Get("/");
    return static_cast<bool>(res);
  }

 private:
  httplib::Client make_client() const {
    httplib::Client client(url_.origin);
    client.set_connection_timeout(cfg_.connect_timeout);
    client.set_read_timeout(cfg_.read_timeout);
    client.set_write_timeout(cfg_.read_timeout);
    return client;
  }

  LiveBackendConfig cfg_;
  ParsedUrl url_;
};

}  // namespace kurosawa
