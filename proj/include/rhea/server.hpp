#pragma once

// HTTP front end for a SessionManager:
//   POST   /v1/chat                  {session_id, message} -> {reply, diagnostics}
//   GET    /v1/sessions/{id}/memory  -> {instructions, records}
//   DELETE /v1/sessions/{id}
//   GET    /healthz

#include <memory>
#include <string>

#include "rhea/gateway.hpp"

namespace httplib {
class Server;
}

namespace rhea {

class ChatServer {
 public:
  explicit ChatServer(SessionManager& sessions);
  ~ChatServer();
  ChatServer(const ChatServer&) = delete;
  ChatServer& operator=(const ChatServer&) = delete;

  /// Binds and serves until stop(). Throws Error(BackendUnavailable) when
  /// the port cannot be bound.
  void listen(const std::string& host, int port);
  /// Binds to an ephemeral port and returns it; serve with run().
  int bind_any(const std::string& host);
  void run();
  void stop();
  bool running() const;

 private:
  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace rhea
