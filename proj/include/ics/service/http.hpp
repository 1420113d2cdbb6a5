#pragma once

#include <memory>
#include <string>
#include <thread>

#include "ics/service/service.hpp"

namespace ics::service {

// JSON-over-HTTP front end for a RecommendationService:
//
//   POST /sessions                     {aspects?}                -> 201 {session_id}
//   POST /sessions/{id}/utterances     {text}                    -> Recommendation
//   POST /sessions/{id}/feedback       {turn, outcome, scenario_id?}
//   POST /sessions/{id}/close          {resolved}
//   GET  /metrics[?since=&until=]      -> MetricsSnapshot
//   GET  /catalog                      -> scenario and solution listing
//   GET  /healthz
//
// Errors come back as {error, message}: 400 for validation, schema and
// malformed bodies, 404 for unknown sessions, 503 without models.
class HttpServer {
 public:
  explicit HttpServer(RecommendationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds an ephemeral port. Returns the bound port; throws Error when
  // binding fails.
  int bind(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void serve();
  // Serves on a background thread; returns once the server accepts requests.
  void start();
  void stop();
  int port() const noexcept { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace ics::service
