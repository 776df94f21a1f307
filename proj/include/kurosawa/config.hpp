#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "kurosawa/error.hpp"
#include "kurosawa/generation.hpp"
#include "kurosawa/http_backend.hpp"
#include "kurosawa/io.hpp"
#include "kurosawa/json_io.hpp"
#include "kurosawa/script_parser.hpp"

namespace kurosawa {

#ifndef KUROSAWA_DEFAULT_MOCK_BANK
#define KUROSAWA_DEFAULT_MOCK_BANK "data/mock_bank"
#endif

/// Overlays any sampling fields present in `j` onto `base`.
inline GenerationConfig apply_generation_json(GenerationConfig base, const json& j) {
  if (j.is_null()) return base;
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "config must be an object");
  try {
    if (j.contains("temperature")) base.temperature = j["temperature"].get<double>();
    if (j.contains("top_p")) base.top_p = j["top_p"].get<double>();
    if (j.contains("frequency_penalty")) base.frequency_penalty = j["frequency_penalty"].get<double>();
    if (j.contains("presence_penalty")) base.presence_penalty = j["presence_penalty"].get<double>();
    if (j.contains("max_tokens")) base.max_tokens = j["max_tokens"].get<int>();
    if (j.contains("stop")) base.stop = j["stop"].get<std::vector<std::string>>();
    if (j.contains("model_ref")) base.model_ref = j["model_ref"].get<std::string>();
    if (j.contains("prompt_separator")) base.prompt_separator = j["prompt_separator"].get<std::string>();
    if (j.contains("context_limit")) base.context_limit = j["context_limit"].get<int>();
    if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("logprobs")) base.logprobs = j["logprobs"].get<bool>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("bad generation config: ") + e.what());
  }
  base.validate();
  return base;
}

inline json generation_config_json(const GenerationConfig& c) {
  return json{{"temperature", c.temperature},
              {"top_p", c.top_p},
              {"frequency_penalty", c.frequency_penalty},
              {"presence_penalty", c.presence_penalty},
              {"max_tokens", c.max_tokens},
              {"stop", c.stop},
              {"model_ref", c.model_ref},
              {"context_limit", c.context_limit},
              {"seed", c.seed}};
}

inline LayoutConfig apply_layout_json(LayoutConfig base, const json& j) {
  if (j.is_null()) return base;
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "layout must be an object");
  try {
    if (j.contains("cue_indent_min")) base.cue_indent_min = j["cue_indent_min"].get<int>();
    if (j.contains("dialogue_indent_min")) base.dialogue_indent_min = j["dialogue_indent_min"].get<int>();
    if (j.contains("transition_keywords"))
      base.transition_keywords = j["transition_keywords"].get<std::set<std::string>>();
    if (j.contains("slugline_prefixes")) base.slugline_prefixes = j["slugline_prefixes"].get<std::set<std::string>>();
    if (j.contains("cue_extension_allowlist"))
      base.cue_extension_allowlist = j["cue_extension_allowlist"].get<std::set<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("bad layout config: ") + e.what());
  }
  base.validate();
  return base;
}

struct ServiceConfig {
  std::string listen_address = "127.0.0.1:8080";
  std::filesystem::path data_dir = "kurosawa-data";
  std::string backend = "mock";  // mock | live
  std::filesystem::path mock_bank = KUROSAWA_DEFAULT_MOCK_BANK;
  LiveBackendConfig live;
  GenerationConfig generation;
  LayoutConfig layout;
  std::string cors_origin = "*";
  std::string api_token;

  std::string host() const { return listen_address.substr(0, listen_address.rfind(':')); }
  int port() const {
    const auto c = listen_address.rfind(':');
    if (c == std::string::npos) throw Error(ErrorCode::InvalidConfig, "listen_address needs host:port");
    try {
      return std::stoi(listen_address.substr(c + 1));
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidConfig, "listen_address port is not a number", {{"listen_address", listen_address}});
    }
  }

  /// JSON document with the same keys as the fields above, plus
  /// backend_url / backend_token / model_ref for the live client.
  static ServiceConfig from_json(const json& j) {
    ServiceConfig c;
    if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config document must be an object");
    try {
      c.listen_address = j.value("listen_address", c.listen_address);
      c.data_dir = j.value("data_dir", c.data_dir.string());
      c.backend = j.value("backend", c.backend);
      c.mock_bank = j.value("mock_bank", c.mock_bank.string());
      c.live.url = j.value("backend_url", c.live.url);
      c.live.token = j.value("backend_token", c.live.token);
      c.live.model_ref = j.value("model_ref", c.live.model_ref);
      c.cors_origin = j.value("cors_origin", c.cors_origin);
      c.api_token = j.value("api_token", c.api_token);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("bad config value: ") + e.what());
    }
    if (j.contains("generation")) c.generation = apply_generation_json(c.generation, j["generation"]);
    if (j.contains("layout")) c.layout = apply_layout_json(c.layout, j["layout"]);
    return c;
  }

  static ServiceConfig from_file(const std::filesystem::path& path) {
    const auto text = read_file(path);
    try {
      return from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::InvalidConfig, std::string("config file is not valid JSON: ") + e.what(),
                  {{"path", path.string()}});
    }
  }

  // Environment wins over file values.
  void apply_env() {
    if (const char* v = std::getenv("KUROSAWA_LISTEN")) listen_address = v;
    if (const char* v = std::getenv("KUROSAWA_DATA_DIR")) data_dir = v;
    if (const char* v = std::getenv("KUROSAWA_BACKEND")) backend = v;
    if (const char* v = std::getenv("KUROSAWA_MOCK_BANK")) mock_bank = v;
    if (const char* v = std::getenv("KUROSAWA_API_TOKEN")) api_token = v;
    live = LiveBackendConfig::from_env(live);
  }
};

}  // namespace kurosawa
