#pragma once

#include <functional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "kurosawa/workbench.hpp"

namespace kurosawa {

/// /api/v1 routes over a Workbench.
class HttpServer {
 public:
  static constexpr const char* kPrefix = "/api/v1";

  explicit HttpServer(Workbench& wb) : wb_(wb) { install(); }

  httplib::Server& raw() noexcept { return svr_; }

  bool listen(const std::string& host, int port) { return svr_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return svr_.bind_to_any_port(host); }
  bool listen_after_bind() { return svr_.listen_after_bind(); }
  void stop() { svr_.stop(); }
  void wait_until_ready() const { svr_.wait_until_ready(); }

 private:
  using Handler = std::function<std::pair<int, json>(const httplib::Request&)>;

  static void send(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
  }

  static json body_of(const httplib::Request& req) {
    const auto ct = req.get_header_value("Content-Type");
    if (ct.rfind("application/json", 0) != 0) {
      throw Error(ErrorCode::BadRequest, "Content-Type must be application/json", {{"content_type", ct}});
    }
    try {
      return json::parse(req.body);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::BadRequest, std::string("malformed JSON body: ") + e.what());
    }
  }

  static std::optional<std::string> query(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) return std::nullopt;
    return req.get_param_value(key);
  }

  bool authorized(const httplib::Request& req) const {
    const auto& token = wb_.config().api_token;
    if (token.empty() || req.path == std::string(kPrefix) + "/healthz") return true;
    return req.get_header_value("Authorization") == "Bearer " + token;
  }

  void route(const char* method, const std::string& pattern, Handler h) {
    auto wrapped = [this, h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        if (!authorized(req)) throw Error(ErrorCode::Unauthorized, "missing or wrong bearer token");
        auto [status, body] = h(req);
        send(res, status, body);
      } catch (const Error& e) {
        send(res, http_status(e.code()), error_body(e));
      } catch (const std::exception& e) {
        send(res, 500, error_body(Error(ErrorCode::IoError, e.what())));
      }
    };
    const auto path = std::string(kPrefix) + pattern;
    if (std::string(method) == "GET") {
      svr_.Get(path, wrapped);
    } else {
      svr_.Post(path, wrapped);
    }
  }

  void install() {
    const auto origin = wb_.config().cors_origin;
    svr_.set_default_headers({{"Access-Control-Allow-Origin", origin},
                              {"Access-Control-Allow-Headers", "Content-Type, Authorization"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    svr_.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    route("GET", "/healthz", [this](const auto&) { return std::pair{200, wb_.health()}; });
    route("GET", "/genres", [this](const auto&) { return std::pair{200, wb_.genres()}; });

    route("POST", "/parse/script", [this](const auto& req) { return std::pair{200, wb_.parse_script(body_of(req))}; });
    route("POST", "/scenes/encode", [this](const auto& req) { return std::pair{200, wb_.encode_scene(body_of(req))}; });
    route("POST", "/scenes/decode", [this](const auto& req) { return std::pair{200, wb_.decode_scene(body_of(req))}; });

    route("POST", "/plots/validate", [this](const auto& req) {
      const auto report = wb_.validate_plot(body_of(req));
      if (report.ok()) return std::pair{200, json(report)};
      const auto& first = report.errors.front();
      auto body = error_body(Error(first.code, first.message, first.detail));
      body["report"] = report;
      return std::pair{400, body};
    });
    route("POST", "/plots/generate", [this](const auto& req) { return std::pair{200, json(wb_.generate_plot(body_of(req)))}; });
    route("POST", "/scenes/generate", [this](const auto& req) { return std::pair{200, json(wb_.generate_scene(body_of(req)))}; });

    route("GET", "/datasets", [this](const auto&) { return std::pair{200, json{{"datasets", wb_.list_datasets()}}}; });
    route("POST", "/datasets", [this](const auto& req) { return std::pair{201, json(wb_.create_dataset(body_of(req)))}; });
    route("POST", R"(/datasets/([0-9A-Z]+)/records)", [this](const httplib::Request& req) {
      return std::pair{201, wb_.add_dataset_record(req.matches[1], body_of(req))};
    });
    route("GET", R"(/datasets/([0-9A-Z]+)/export)", [this](const httplib::Request& req) {
      const auto prof = query(req, "profile");
      if (!prof) throw Error(ErrorCode::BadRequest, "profile query parameter is required");
      return std::pair{200, wb_.export_dataset(req.matches[1], *prof)};
    });
    route("GET", R"(/datasets/([0-9A-Z]+)/stats)", [this](const httplib::Request& req) {
      return std::pair{200, wb_.dataset_stats(req.matches[1])};
    });

    route("POST", "/eval/report", [this](const auto& req) { return std::pair{200, json(wb_.eval_report(body_of(req)))}; });

    route("POST", "/ratings", [this](const auto& req) { return std::pair{201, json(wb_.add_rating(body_of(req)))}; });
    route("GET", "/ratings/summary", [this](const httplib::Request& req) {
      return std::pair{200, json(wb_.ratings_summary(query(req, "kind")))};
    });

    route("GET", R"(/items/([0-9A-Za-z]+))", [this](const httplib::Request& req) {
      return std::pair{200, json(wb_.get_item(req.matches[1]))};
    });
    route("GET", "/items", [this](const httplib::Request& req) {
      std::size_t limit = 50;
      if (auto l = query(req, "limit")) {
        try {
          limit = std::stoul(*l);
        } catch (const std::exception&) {
          throw Error(ErrorCode::BadRequest, "limit must be a number", {{"limit", *l}});
        }
      }
      return std::pair{200, page_json(wb_.list_items(query(req, "kind"), query(req, "page").value_or(""), limit))};
    });
  }

  Workbench& wb_;
  httplib::Server svr_;
};

}  // namespace kurosawa
