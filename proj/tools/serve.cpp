#include <csignal>
#include <filesystem>
#include <iostream>

#include "steer/orchestrator/server.hpp"

namespace fs = std::filesystem;
using namespace steer;

namespace {
orchestrator::Server* running = nullptr;
void on_signal(int) {
  if (running) running->stop();
}
}  // namespace

int serve_main(int port, const std::string& world_file, const std::string& grammar) {
  const fs::path data = std::getenv("STEER_DATA_DIR") ? fs::path(std::getenv("STEER_DATA_DIR")) : fs::path(STEER_DATA_DIR);
  const auto dict = grammar::load_grammar_file(grammar.empty() ? data / "grammar" / "english.grammar" : fs::path(grammar));
  const auto world = world::load_world_file(world_file.empty() ? data / "worlds" / "scenario1.json" : fs::path(world_file));
  orchestrator::LivePipeline pipeline(dict, data / "scenarios", world, orchestrator::home_state(world));
  orchestrator::Server server(pipeline, static_cast<unsigned short>(port));
  running = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on ws://127.0.0.1:" << server.port() << std::endl;
  server.run();
  running = nullptr;
  return 0;
}
