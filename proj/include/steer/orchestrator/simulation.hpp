#pragma once

#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/control/horizon.hpp"
#include "steer/orchestrator/scenario.hpp"
#include "steer/parser/chart.hpp"
#include "steer/planner/corridor.hpp"
#include "steer/resolver/resolver.hpp"

namespace steer::orchestrator {

// One control tick of the executed trajectory. `phase` describes the
// interval [t, t + dt): "idle", "planning" or "moving".
struct TrajectoryRow {
  double t = 0;
  control::EEState x;
  std::uint64_t event = 0;  // latest applied event id
  double slack = 0;         // max slack of the first predicted step
  std::string phase = "idle";
  std::uint64_t revision = 0;
  double region_violation = 0;       // m outside the corridor
  double keepout_depth = 0;          // m inside an active keep-out
  double orientation_violation = 0;  // rad outside the safe orientation box
};

// Everything a run leaves behind. `records` are the events.jsonl lines:
// word, event, plan, goal_reached, error, end.
struct RunLog {
  double dt = 0.1;
  std::string mode = "online";
  std::vector<TrajectoryRow> rows;
  std::vector<nlohmann::json> records;
  std::vector<nlohmann::json> corridors;
};

struct RunMetrics {
  std::vector<double> t_plan;       // s; wall time online, planning latency offline
  std::vector<double> t_plan_wall;  // s; wall time of the planner call
  std::vector<double> t_traj;       // s per executed segment
  std::optional<double> t_task;     // first word -> final goal; empty when never reached
  double t_idle = 0;                // s neither planning nor moving inside the task window
  std::vector<nlohmann::json> events;  // {t, id, kinds}
  std::optional<double> min_mid_motion_speed;
  double max_region_violation = 0;
  double max_keepout_depth = 0;
  double max_orientation_violation = 0;
  double max_slack = 0;
  bool goal_reached = false;
  std::vector<std::string> errors;
};

RunMetrics compute_metrics(const RunLog& log);
nlohmann::json to_json(const RunMetrics& metrics);

struct SimConfig {
  Mode mode = Mode::online;
  double offline_latency = 5.6;
  control::ControllerConfig controller;
  planner::PlannerConfig planner;
  resolver::ResolverConfig resolver;
  double goal_tolerance = 2e-3;   // m
  double stop_speed = 0.01;       // m/s, goal reached below this
};

// Deterministic closed loop at a fixed tick. Words are parsed when they
// arrive; their events take effect at the first tick at or after arrival.
class Simulation {
 public:
  Simulation(world::WorldSnapshot world, const grammar::Dictionary& dict, const control::EEState& initial,
             SimConfig config = {});

  // Feeds one word that arrived at time `t` (>= the previous arrival).
  parser::ParseResult feed_word(const std::string& word, double t);
  void tick();

  double time() const { return tick_ * config_.controller.dt; }
  bool busy() const;  // planning, moving, or holding unapplied events
  bool task_complete() const { return goal_reached_ && !busy(); }

  const control::EEState& state() const { return x_; }
  const planner::AdmissibleSets& sets() const { return sets_; }
  const parser::Chart& chart() const { return chart_; }
  const parser::ParseResult& parse() const { return parse_; }
  const RunLog& log() const { return log_; }
  const world::WorldSnapshot& world() const { return world_; }
  const grammar::Dictionary& dictionary() const { return dict_; }
  int region() const { return region_; }
  void record_end(const std::string& reason);

 private:
  void apply(const resolver::InstructionEvent& event);
  void start_job(double t);
  void finish_job();
  void plan(const resolver::InstructionEvent& trigger, const std::string& reason);
  void advance_stage();
  bool at_goal() const;
  void error(const std::string& kind, const std::string& what);

  world::WorldSnapshot world_;
  const grammar::Dictionary& dict_;
  SimConfig config_;
  control::EEState x_;
  control::ControlInput u_;
  long tick_ = 0;

  parser::Chart chart_;
  parser::ParseResult parse_;
  std::string resolved_;  // serialization of the last resolved parse
  std::optional<resolver::InstructionEvent> prior_;  // last full resolution
  std::uint64_t next_id_ = 1;
  std::deque<resolver::InstructionEvent> arrived_;  // waiting for the next tick
  std::deque<resolver::InstructionEvent> pending_;  // offline: waiting for a planning slot

  planner::AdmissibleSets sets_;
  resolver::CostParams params_;
  std::deque<resolver::GoalTarget> queue_;
  int completed_ = 0;
  std::uint64_t active_event_ = 0;
  bool goal_reached_ = false;
  bool ever_goal_ = false;

  // offline planning job
  bool planning_ = false;
  double planning_until_ = 0;
  std::vector<resolver::InstructionEvent> job_;
  bool job_stage_ = false;

  double progress_ = 0;
  int region_ = 0;
  std::optional<control::HorizonSolution> previous_;

  RunLog log_;
};

struct RunResult {
  RunLog log;
  RunMetrics metrics;
};

// Scripted run to task completion or timeout.
RunResult run(const Scenario& scenario, const grammar::Dictionary& dict, SimConfig config = {});

// trajectory.csv, events.jsonl, corridors.json, metrics.json
void write_run(const std::filesystem::path& dir, const RunResult& result);
RunLog load_run(const std::filesystem::path& dir);
std::string trajectory_csv(const RunLog& log);

}  // namespace steer::orchestrator
