#include "steer/orchestrator/scenario.hpp"

#include <fstream>
#include <sstream>

namespace steer::orchestrator {

using nlohmann::json;

std::string_view to_string(Mode mode) { return mode == Mode::online ? "online" : "offline"; }

Mode mode_from_string(std::string_view text) {
  if (text == "online") return Mode::online;
  if (text == "offline" || text == "offline_baseline") return Mode::offline;
  throw ScenarioError("unknown mode " + std::string(text));
}

namespace {

world::Vec3 vec3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw ScenarioError(std::string(what) + " must be [x, y, z]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

world::Vec2 vec2(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2) throw ScenarioError(std::string(what) + " must be [e1, e2]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

Scenario load_scenario(const json& doc, const std::filesystem::path& base) {
  try {
    if (doc.value("schema", "") != kScenarioSchema) throw ScenarioError("schema must be steer.scenario/1");
    Scenario s;
    s.name = doc.value("name", "");
    s.world_path = base / doc.at("world").get<std::string>();
    s.world = world::load_world_file(s.world_path);
    const json& init = doc.at("initial");
    s.initial.p = vec3(init.at("position"), "initial.position");
    if (init.contains("orientation")) s.initial.e = vec2(init["orientation"], "initial.orientation");
    if (init.contains("velocity")) s.initial.v = vec3(init["velocity"], "initial.velocity");
    if (!s.world.workspace.contains(s.initial.p)) throw ScenarioError("initial position outside the workspace");
    double last = 0;
    for (const json& w : doc.value("words", json::array())) {
      TimedWord tw{w.at("t").get<double>(), w.at("word").get<std::string>()};
      if (tw.t < last || tw.t < 0) throw ScenarioError("word times must be non-decreasing and >= 0");
      last = tw.t;
      s.words.push_back(std::move(tw));
    }
    s.mode = mode_from_string(doc.value("mode", "online"));
    s.offline_latency = doc.value("offline_latency", s.mode == Mode::offline ? 5.6 : 0.0);
    if (s.mode == Mode::online && s.offline_latency != 0) throw ScenarioError("offline_latency only in offline mode");
    if (s.mode == Mode::offline && !(s.offline_latency > 0)) throw ScenarioError("offline_latency must be > 0");
    s.seed = doc.value("seed", std::uint64_t{7});
    s.timeout = doc.value("timeout", 60.0);
    return s;
  } catch (const json::exception& e) {
    throw ScenarioError(std::string("scenario: ") + e.what());
  }
}

Scenario load_scenario_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
  return load_scenario(doc, path.parent_path());
}

json to_json(const Scenario& s) {
  json words = json::array();
  for (const auto& w : s.words) words.push_back({{"t", w.t}, {"word", w.word}});
  return {{"schema", kScenarioSchema},
          {"name", s.name},
          {"world", s.world_path.string()},
          {"initial",
           {{"position", world::to_json(s.initial.p)},
            {"orientation", world::to_json(s.initial.e)},
            {"velocity", world::to_json(s.initial.v)}}},
          {"words", words},
          {"mode", to_string(s.mode)},
          {"offline_latency", s.offline_latency},
          {"seed", s.seed},
          {"timeout", s.timeout}};
}

std::vector<TimedWord> timed_words(const std::string& text, double t0, double spacing) {
  std::vector<TimedWord> out;
  std::istringstream in(text);
  double t = t0;
  for (std::string w; in >> w; t += spacing) out.push_back({t, w});
  return out;
}

}  // namespace steer::orchestrator
