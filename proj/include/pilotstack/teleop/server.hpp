#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "pilotstack/teleop/sim_context.hpp"

namespace pilot::teleop {

/// HTTP + WebSocket front end for a SimContext.
///   GET /         the UI bundle (ui_root/index.html, or a built-in page)
///   GET /healthz  200 "ok"
///   /ws           WebSocket, subprotocol "pilotstack.v1"
/// A message that breaks the protocol closes its connection with code 1002.
class TeleopServer {
 public:
  TeleopServer(SimContext& sim, std::string address, unsigned short port, std::filesystem::path ui_root = {});
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  /// Binds and starts serving on a background thread. Throws std::runtime_error
  /// if the address cannot be bound.
  void start();
  void stop();
  /// The bound port (useful after binding port 0).
  unsigned short port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pilot::teleop
