#pragma once

#include <chrono>
#include <functional>
#include <memory>

#include "steer/orchestrator/live.hpp"

namespace steer::orchestrator {

// WebSocket transport for LivePipeline. Single-threaded: all sessions, the
// tick timer and the pipeline share one event loop.
class Server {
 public:
  // port 0 picks a free port; throws on bind failure.
  Server(LivePipeline& pipeline, unsigned short port, std::chrono::milliseconds tick = std::chrono::milliseconds(100));
  ~Server();

  unsigned short port() const;
  // Blocks until stop().
  void run();
  // Thread-safe.
  void stop();

 struct Impl;  // also seen by the session type

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace steer::orchestrator
