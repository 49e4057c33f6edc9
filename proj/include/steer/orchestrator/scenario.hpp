#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/control/horizon.hpp"
#include "steer/world/world.hpp"

namespace steer::orchestrator {

enum class Mode { online, offline };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

struct TimedWord {
  double t = 0;
  std::string word;
};

struct Scenario {
  std::string name;
  std::filesystem::path world_path;
  world::WorldSnapshot world;
  control::EEState initial;
  std::vector<TimedWord> words;  // non-decreasing t
  Mode mode = Mode::online;
  double offline_latency = 0;  // s, offline mode only
  std::uint64_t seed = 7;
  double timeout = 60;  // s simulated
};

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kScenarioSchema = "steer.scenario/1";

// "world" is resolved relative to `base` (the scenario file's directory).
Scenario load_scenario(const nlohmann::json& doc, const std::filesystem::path& base);
Scenario load_scenario_file(const std::filesystem::path& path);
nlohmann::json to_json(const Scenario& scenario);

// Words of `text` at t0, t0 + spacing, ...
std::vector<TimedWord> timed_words(const std::string& text, double t0, double spacing);

}  // namespace steer::orchestrator
