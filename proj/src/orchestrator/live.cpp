#include "steer/orchestrator/live.hpp"

#include <regex>

namespace steer::orchestrator {

using nlohmann::json;

control::EEState home_state(const world::WorldSnapshot& world) {
  control::EEState x;
  const auto it = world.locations.find("home");
  if (it != world.locations.end()) {
    x.p = it->second.position;
    x.e = it->second.orientation;
  } else {
    x.p = world.workspace_box.center();
  }
  return x;
}

LivePipeline::LivePipeline(const grammar::Dictionary& dict, std::filesystem::path scenario_dir,
                           world::WorldSnapshot world, control::EEState initial, SimConfig config)
    : dict_(dict),
      scenario_dir_(std::move(scenario_dir)),
      world_(std::move(world)),
      initial_(initial),
      config_(std::move(config)) {
  restart();
}

void LivePipeline::restart() {
  sim_ = std::make_unique<Simulation>(world_, dict_, initial_, config_);
  record_cursor_ = 0;
  corridor_cursor_ = 0;
}

json LivePipeline::state_frame() const {
  const auto& x = sim_->state();
  const auto& sets = sim_->sets();
  json goal = nullptr;
  if (sets.revision > 0) goal = world::to_json(sets.goal);
  json regions = json::array();
  if (sets.revision > 0) regions.push_back(sim_->region());
  return {{"type", "state"},
          {"t", sim_->time()},
          {"p", world::to_json(x.p)},
          {"e", world::to_json(x.e)},
          {"v", world::to_json(x.v)},
          {"speed", x.v.norm()},
          {"phase", sim_->log().rows.empty() ? "idle" : sim_->log().rows.back().phase},
          {"revision", sets.revision},
          {"regions", regions},
          {"goal", goal}};
}

// Frames for log entries added since the last call.
std::vector<json> LivePipeline::drain() {
  std::vector<json> out;
  const auto& log = sim_->log();
  for (; record_cursor_ < log.records.size(); ++record_cursor_) {
    const json& r = log.records[record_cursor_];
    const std::string type = r.at("type");
    if (type == "event") {
      out.push_back({{"type", "event"}, {"t", r["t"]}, {"id", r["event"]["id"]}, {"kinds", r["kinds"]}, {"event", r["event"]}});
    } else if (type == "goal_reached") {
      out.push_back({{"type", "goal_reached"}, {"t", r["t"]}, {"stage", r["stage"]}, {"object", r["object"]},
                     {"site", r["site"]}, {"final", r["final"]}});
      if (r["final"].get<bool>()) {
        RunLog snapshot = log;
        snapshot.records.push_back({{"type", "end"}, {"t", sim_->time()}, {"reason", "complete"}, {"goal_reached", true}});
        out.push_back({{"type", "metrics"}, {"t", r["t"]}, {"metrics", to_json(compute_metrics(snapshot))}});
      }
    } else if (type == "error") {
      out.push_back({{"type", "error"}, {"message", r["kind"].get<std::string>() + ": " + r["what"].get<std::string>()}});
    }
  }
  for (; corridor_cursor_ < log.corridors.size(); ++corridor_cursor_) {
    const json& c = log.corridors[corridor_cursor_];
    out.push_back({{"type", "corridor"}, {"t", c["t"]}, {"revision", c["revision"]}, {"sets", c["sets"]}});
  }
  return out;
}

LiveFrames LivePipeline::process_message(const std::string& text) {
  LiveFrames frames;
  auto fail = [&](const std::string& message) {
    frames.reply.push_back({{"type", "error"}, {"message", message}});
    return frames;
  };
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::exception&) {
    return fail("malformed frame: not JSON");
  }
  if (!msg.is_object()) return fail("malformed frame: expected an object");
  std::string type = msg.value("type", msg.contains("word") ? "word" : "");

  try {
    if (type == "word") {
      if (!msg.contains("word") || !msg["word"].is_string()) return fail("word frame needs a string \"word\"");
      const auto tokens = grammar::tokenize(msg["word"].get<std::string>());
      if (tokens.empty()) return fail("empty word");
      parser::ParseResult r;
      for (const auto& w : tokens) r = sim_->feed_word(w, sim_->time());
      json alternatives = json::array();
      for (const auto& n : r.alternatives) alternatives.push_back(n.semantics.str());
      frames.broadcast.push_back({{"type", "parse"},
                                  {"t", sim_->time()},
                                  {"word", msg["word"]},
                                  {"tokens", sim_->chart().tokens()},
                                  {"status", parser::to_string(r.status)},
                                  {"best", r.best ? json(r.best->semantics.str()) : json(nullptr)},
                                  {"alternatives", alternatives},
                                  {"dump", sim_->chart().dump(dict_, r.best)},
                                  {"version", r.version}});
    } else if (type == "select_scenario") {
      const std::string name = msg.value("scenario", "");
      if (!std::regex_match(name, std::regex("[A-Za-z0-9_-]+"))) return fail("bad scenario name");
      const Scenario s = load_scenario_file(scenario_dir_ / (name + ".json"));
      world_ = s.world;
      initial_ = s.initial;
      config_.mode = s.mode;
      if (s.mode == Mode::offline) config_.offline_latency = s.offline_latency;
      config_.resolver.seed = s.seed;
      scenario_name_ = name;
      restart();
      frames.broadcast.push_back(
          {{"type", "scenario"}, {"name", name}, {"mode", to_string(s.mode)}, {"world", world::to_json(world_)}});
      frames.broadcast.push_back(state_frame());
    } else if (type == "reset") {
      restart();
      frames.broadcast.push_back({{"type", "scenario"},
                                  {"name", scenario_name_},
                                  {"mode", to_string(config_.mode)},
                                  {"world", world::to_json(world_)}});
      frames.broadcast.push_back(state_frame());
    } else if (type == "mode") {
      config_.mode = mode_from_string(msg.value("mode", ""));
      restart();
      frames.broadcast.push_back({{"type", "scenario"},
                                  {"name", scenario_name_},
                                  {"mode", to_string(config_.mode)},
                                  {"world", world::to_json(world_)}});
      frames.broadcast.push_back(state_frame());
    } else {
      return fail("unknown frame type \"" + type + "\"");
    }
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  for (auto& f : drain()) frames.broadcast.push_back(std::move(f));
  return frames;
}

std::vector<json> LivePipeline::tick() {
  sim_->tick();
  std::vector<json> out = drain();
  out.push_back(state_frame());
  return out;
}

}  // namespace steer::orchestrator
