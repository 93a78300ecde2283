// HTTP/JSON front end for SessionService.
//
//   POST /sessions               {"strategy","n","mode","profile"?} -> 201 session view
//   GET  /sessions/{id}/next     pending probe or final result
//   POST /sessions/{id}/answer   {"outcome":"pass"|"fail"}
//   GET  /sessions/{id}          full history and running frustration
//
// Errors come back as {"error": message} with a 4xx/5xx status.
#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "cat/session_service.hpp"

namespace httplib {
class Server;
}

namespace cat::service {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  // Served at "/" when non-empty.
  std::filesystem::path static_dir;
};

class HttpServer {
 public:
  HttpServer(SessionService& service, ServerConfig config);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to config.port, or to a free port when it is 0. Returns the port, or -1.
  // Throws IoError when the static directory cannot be mounted.
  int bind();
  // Blocks serving requests until stop(). Requires a successful bind().
  bool listen();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();

  SessionService& service_;
  ServerConfig config_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace cat::service
