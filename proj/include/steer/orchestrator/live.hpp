#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/orchestrator/simulation.hpp"

namespace steer::orchestrator {

// Frozen wire protocol (JSON text frames).
//
// client -> server
//   {"type":"word","word":"grab"}            (a bare {"word":"grab"} is accepted)
//   {"type":"select_scenario","scenario":"scenario1_online"}
//   {"type":"reset"}
//   {"type":"mode","mode":"online"|"offline"}
//
// server -> client
//   {"type":"state","t","p","e","v","speed","phase","revision","regions","goal"}
//   {"type":"parse","t","word","tokens","status","best","alternatives","dump","version"}
//   {"type":"event","t","id","kinds","event"}
//   {"type":"corridor","t","revision","sets"}
//   {"type":"goal_reached","t","stage","object","site","final"}
//   {"type":"metrics","t","metrics"}
//   {"type":"scenario","name","mode","world"}
//   {"type":"error","message"}
inline constexpr int kProtocolVersion = 1;

struct LiveFrames {
  std::vector<nlohmann::json> broadcast;  // for every client
  std::vector<nlohmann::json> reply;      // for the sender only
};

// The pipeline behind the service: one simulation advanced one tick per
// call of tick(), words applied as they arrive.
class LivePipeline {
 public:
  LivePipeline(const grammar::Dictionary& dict, std::filesystem::path scenario_dir, world::WorldSnapshot world,
               control::EEState initial, SimConfig config = {});

  LiveFrames process_message(const std::string& text);
  std::vector<nlohmann::json> tick();

  nlohmann::json state_frame() const;
  const Simulation& simulation() const { return *sim_; }

 private:
  void restart();
  std::vector<nlohmann::json> drain();

  const grammar::Dictionary& dict_;
  std::filesystem::path scenario_dir_;
  world::WorldSnapshot world_;
  control::EEState initial_;
  SimConfig config_;
  std::string scenario_name_;
  std::unique_ptr<Simulation> sim_;
  std::size_t record_cursor_ = 0;
  std::size_t corridor_cursor_ = 0;
};

// Initial end-effector state for a bare world: its "home" location, or the
// centre of the workspace box.
control::EEState home_state(const world::WorldSnapshot& world);

}  // namespace steer::orchestrator
