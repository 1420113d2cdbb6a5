#include "ics/service/http.hpp"

#include <httplib.h>

#include "ics/errors.hpp"

namespace ics::service {
namespace {

constexpr const char* kJson = "application/json";

void reply(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void reply_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  reply(res, status, {{"error", kind}, {"message", message}});
}

// Empty bodies parse as an empty object so optional-body endpoints accept
// them.
nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return nlohmann::json::object();
  auto j = nlohmann::json::parse(req.body);
  if (!j.is_object()) throw ValidationError("request body must be a JSON object");
  return j;
}

std::optional<double> query_number(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  try {
    return std::stod(req.get_param_value(key));
  } catch (const std::exception&) {
    throw ValidationError(std::string("query parameter '") + key + "' must be a number");
  }
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const nlohmann::json::exception& e) {
      reply_error(res, 400, "bad_request", e.what());
    } catch (const SchemaError& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", "schema"}, {"message", e.what()}, {"field", e.field()}}.dump(), kJson);
    } catch (const ValidationError& e) {
      reply_error(res, 400, "validation", e.what());
    } catch (const NotFoundError& e) {
      reply_error(res, 404, "not_found", e.what());
    } catch (const UnavailableError& e) {
      reply_error(res, 503, "unavailable", e.what());
    } catch (const std::exception& e) {
      reply_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(RecommendationService& service) : impl_(std::make_unique<Impl>()) {
  auto& s = impl_->server;
  RecommendationService* svc = &service;

  s.Post("/sessions", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    std::optional<matcher::AttributeMap> aspects;
    if (body.contains("aspects") && !body.at("aspects").is_null()) {
      aspects = matcher::attributes_from_json(body.at("aspects"));
    }
    reply(res, 201, {{"session_id", svc->open(aspects)}});
  }));

  s.Post(R"(/sessions/([^/]+)/utterances)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (!body.contains("text") || !body.at("text").is_string()) throw ValidationError("'text' must be a string");
    reply(res, 200, svc->recommend(req.matches[1], body.at("text").get<std::string>()).to_json());
  }));

  s.Post(R"(/sessions/([^/]+)/feedback)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (!body.contains("turn") || !body.at("turn").is_number_unsigned()) {
      throw ValidationError("'turn' must be a non-negative integer");
    }
    if (!body.contains("outcome") || !body.at("outcome").is_string()) throw ValidationError("'outcome' is required");
    const auto turn = body.at("turn").get<std::size_t>();
    const auto outcome = feedback_outcome_from_string(body.at("outcome").get<std::string>());
    const auto scenario = body.value("scenario_id", std::string());
    const std::string id = req.matches[1];
    svc->feedback(id, turn, outcome, scenario);
    reply(res, 200, {{"session_id", id}, {"turn", turn}, {"outcome", to_string(outcome)}, {"recorded", true}});
  }));

  s.Post(R"(/sessions/([^/]+)/close)", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    const auto body = parse_body(req);
    if (body.contains("resolved") && !body.at("resolved").is_boolean()) {
      throw ValidationError("'resolved' must be a boolean");
    }
    const std::string id = req.matches[1];
    const bool resolved = body.value("resolved", false);
    svc->close(id, resolved);
    reply(res, 200, {{"session_id", id}, {"closed", true}, {"resolved", resolved}});
  }));

  s.Get("/metrics", guarded([svc](const httplib::Request& req, httplib::Response& res) {
    Window window{query_number(req, "since"), query_number(req, "until")};
    reply(res, 200, svc->metrics(window).to_json());
  }));

  s.Get("/catalog", guarded([svc](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, svc->catalog_json());
  }));

  s.Get("/healthz", guarded([svc](const httplib::Request&, httplib::Response& res) {
    const bool ok = svc->healthy();
    reply(res, ok ? 200 : 503, {{"status", ok ? "ok" : "unavailable"}, {"models_loaded", ok}});
  }));
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  auto& s = impl_->server;
  if (port == 0) {
    port_ = s.bind_to_any_port(host);
  } else {
    port_ = s.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port_;
}

void HttpServer::serve() {
  if (port_ < 0) throw Error("HttpServer::serve called before bind");
  impl_->server.listen_after_bind();
}

void HttpServer::start() {
  if (port_ < 0) throw Error("HttpServer::start called before bind");
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace ics::service
