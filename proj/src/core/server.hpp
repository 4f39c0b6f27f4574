#pragma once

// Line-oriented TCP front end for SessionCore. One client at a time; a second
// connection gets a busy message and is closed.

#include "service.hpp"

#include <atomic>
#include <functional>
#include <memory>
#include <string>

namespace thumbtrak {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 7878;      // 0 picks a free port
  double speed = 1.0;   // frame clock multiplier; 10 plays a 10 Hz stream at 100 Hz
  int max_clients = 0;  // return after this many sessions, 0 = serve until stopped
  std::function<void(int port)> on_listen; // called once the socket is bound
};

using SessionFactory = std::function<std::unique_ptr<SessionCore>()>;

/// Blocks until `stop` becomes true or max_clients sessions have ended.
/// Throws Error(Io) when the socket cannot be set up.
void serve(const ServerOptions &options, const SessionFactory &factory, const std::atomic<bool> *stop = nullptr);

} // namespace thumbtrak
