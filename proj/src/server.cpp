#include "rhea/server.hpp"

#include <httplib.h>

namespace rhea {

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, json{{"error", {{"code", code}, {"message", message}}}});
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendUnavailable:
      return 502;
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::CorruptSnapshot:
      return 500;
    default:
      return 400;
  }
}

}  // namespace

ChatServer::ChatServer(SessionManager& sessions) : sessions_(sessions), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;

  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { send_json(res, 200, {{"status", "ok"}}); });

  s.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return send_error(res, 400, "InvalidInput", "request body is not JSON");
    }
    if (!body.is_object() || !body.contains("session_id") || !body["session_id"].is_string() ||
        !body.contains("message") || !body["message"].is_string()) {
      return send_error(res, 400, "InvalidInput", "expected {session_id: string, message: string}");
    }
    try {
      auto result = sessions_.chat(body["session_id"].get<std::string>(), body["message"].get<std::string>());
      if (!result) return send_error(res, 409, "Busy", "session is processing another turn");
      send_json(res, 200, json{{"reply", result->reply}, {"diagnostics", diagnostics_json(result->diagnostics)}});
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), std::string(to_string(e.code())), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "Internal", e.what());
    }
  });

  s.Get(R"(/v1/sessions/([^/]+)/memory)", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      auto session = sessions_.get(req.matches[1]);
      if (!session) return send_error(res, 404, "NotFound", "unknown session");
      send_json(res, 200, memory_json(*session));
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), std::string(to_string(e.code())), e.what());
    }
  });

  s.Delete(R"(/v1/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    if (!sessions_.remove(req.matches[1])) return send_error(res, 404, "NotFound", "unknown session");
    send_json(res, 200, {{"deleted", std::string(req.matches[1])}});
  });
}

ChatServer::~ChatServer() { stop(); }

void ChatServer::listen(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::BackendUnavailable, "cannot bind " + host + ":" + std::to_string(port));
  }
  run();
}

int ChatServer::bind_any(const std::string& host) {
  const int port = server_->bind_to_any_port(host);
  if (port < 0) throw Error(ErrorCode::BackendUnavailable, "cannot bind " + host);
  return port;
}

void ChatServer::run() { server_->listen_after_bind(); }

void ChatServer::stop() {
  if (server_) server_->stop();
}

bool ChatServer::running() const { return server_->is_running(); }

}  // namespace rhea
