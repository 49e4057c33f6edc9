#include "steer/orchestrator/simulation.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace steer::orchestrator {

using nlohmann::json;
using resolver::ConstraintKind;
using resolver::InstructionEvent;

namespace {

constexpr double kEps = 1e-9;

json kinds_of(const InstructionEvent& ev) {
  json k = json::array();
  for (const auto& c : ev.constraints) k.push_back(resolver::to_string(c.kind));
  return k;
}

bool has_safety(const InstructionEvent& ev) {
  return std::any_of(ev.constraints.begin(), ev.constraints.end(),
                     [](const auto& c) { return c.kind == ConstraintKind::safety; });
}

world::Pose pose_of(const control::EEState& x) {
  world::Pose p;
  p.position = x.p;
  p.orientation = x.e;
  return p;
}

}  // namespace

Simulation::Simulation(world::WorldSnapshot world, const grammar::Dictionary& dict, const control::EEState& initial,
                       SimConfig config)
    : world_(std::move(world)), dict_(dict), config_(std::move(config)), x_(initial) {
  log_.dt = config_.controller.dt;
  log_.mode = std::string(to_string(config_.mode));
}

void Simulation::error(const std::string& kind, const std::string& what) {
  log_.records.push_back({{"type", "error"}, {"t", time()}, {"kind", kind}, {"what", what}});
}

parser::ParseResult Simulation::feed_word(const std::string& word, double t) {
  parse_ = chart_.feed_word(word, dict_);
  parse_.best = parser::best_parse(parse_, resolver::referent_check(world_, config_.resolver));
  const auto& best = parse_.best;
  log_.records.push_back({{"type", "word"},
                          {"t", t},
                          {"word", word},
                          {"status", parser::to_string(parse_.status)},
                          {"best", best ? json(best->semantics.str()) : json(nullptr)}});
  if (!best) {
    if (parse_.status == parser::ParseStatus::complete) error("unresolved_referent", "no parse grounds in the world");
    return parse_;
  }
  const std::string meaning = best->semantics.str();
  if (meaning == resolved_) return parse_;
  resolved_ = meaning;
  try {
    const resolver::ResolveContext context{prior_ ? &*prior_ : nullptr, completed_};
    auto r = resolver::resolve(*best, world_, context, config_.resolver);
    r.event.id = r.full.id = next_id_++;
    r.event.timestamp = r.full.timestamp = t;
    prior_ = r.full;
    if (!r.event.has_content()) return parse_;
    log_.records.push_back({{"type", "event"}, {"t", t}, {"kinds", kinds_of(r.event)}, {"event", resolver::to_json(r.event)}});
    arrived_.push_back(std::move(r.event));
  } catch (const resolver::ResolveError& e) {
    const char* kind = e.failure() == resolver::ResolveFailure::irreversible ? "irreversible"
                       : e.failure() == resolver::ResolveFailure::unresolved_referent ? "unresolved_referent"
                                                                                         : "no_content";
    log_.records.push_back({{"type", "error"}, {"t", t}, {"kind", kind}, {"what", e.what()}});
  }
  return parse_;
}

bool Simulation::busy() const {
  return planning_ || job_stage_ || !pending_.empty() || !arrived_.empty() || !queue_.empty();
}

bool Simulation::at_goal() const {
  return !queue_.empty() && (x_.p - queue_.front().pose.position).norm() < config_.goal_tolerance &&
         x_.v.norm() < config_.stop_speed;
}

void Simulation::apply(const InstructionEvent& ev) {
  // online: immediately; offline: from finish_job()
  params_ = control::apply_event(params_, ev, config_.controller);
  active_event_ = ev.id;
  log_.records.push_back({{"type", "applied"}, {"t", time()}, {"id", ev.id}});
  if (ev.goal) {
    const auto q = resolver::goal_queue(ev);
    queue_.assign(q.begin(), q.end());
    goal_reached_ = false;
    ever_goal_ = true;
  }
  if (ev.goal || has_safety(ev)) {
    InstructionEvent trigger;
    trigger.id = ev.id;
    for (const auto& c : ev.constraints) {
      if (c.kind == ConstraintKind::safety) trigger.constraints.push_back(c);
    }
    plan(trigger, ev.goal ? "goal" : "safety");
  }
}

void Simulation::plan(const InstructionEvent& trigger_in, const std::string& reason) {
  InstructionEvent trigger = trigger_in;
  if (queue_.empty()) {
    try {
      sets_.safe = planner::extend_safe(sets_.safe, trigger, world_);
    } catch (const planner::NoCorridorError& e) {
      error("no_corridor", e.what());
    }
    return;
  }
  trigger.goal = queue_.front();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    planner::AdmissibleSets next = planner::replan_from(pose_of(x_), trigger, sets_, world_, config_.planner);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    sets_ = std::move(next);
    const bool offline = config_.mode == Mode::offline;
    log_.records.push_back({{"type", "plan"},
                            {"t", offline ? planning_until_ - config_.offline_latency : time()},
                            {"ready", time()},
                            {"wall", wall},
                            {"duration", offline ? config_.offline_latency : wall},
                            {"revision", sets_.revision},
                            {"reason", reason},
                            {"goal", resolver::to_json(*trigger.goal)}});
    log_.corridors.push_back({{"t", time()}, {"revision", sets_.revision}, {"sets", planner::to_json(sets_)}});
    progress_ = 0;
    region_ = 0;
    previous_.reset();
  } catch (const planner::NoCorridorError& e) {
    error("no_corridor", e.what());
  }
}

void Simulation::advance_stage() {
  const resolver::GoalTarget g = queue_.front();
  queue_.pop_front();
  ++completed_;
  log_.records.push_back({{"type", "goal_reached"},
                          {"t", time()},
                          {"stage", g.stage},
                          {"object", g.object_id},
                          {"site", g.site},
                          {"position", world::to_json(g.pose.position)},
                          {"final", queue_.empty()}});
  if (queue_.empty()) {
    goal_reached_ = true;
    return;
  }
  if (config_.mode == Mode::online) {
    plan(InstructionEvent{}, "stage");
  } else {
    job_stage_ = true;
  }
}

void Simulation::start_job(double t) {
  planning_ = true;
  planning_until_ = t + config_.offline_latency;
  job_.assign(pending_.begin(), pending_.end());
  pending_.clear();
}

void Simulation::finish_job() {
  planning_ = false;
  const bool stage = job_stage_;
  job_stage_ = false;
  InstructionEvent trigger;
  bool replan = stage;
  for (const auto& ev : job_) {
    params_ = control::apply_event(params_, ev, config_.controller);
    active_event_ = ev.id;
    log_.records.push_back({{"type", "applied"}, {"t", time()}, {"id", ev.id}});
    if (ev.goal) {
      const auto q = resolver::goal_queue(ev);
      queue_.assign(q.begin(), q.end());
      goal_reached_ = false;
      ever_goal_ = true;
      replan = true;
    }
    for (const auto& c : ev.constraints) {
      if (c.kind == ConstraintKind::safety) {
        trigger.constraints.push_back(c);
        replan = true;
      }
    }
  }
  job_.clear();
  if (replan) plan(trigger, stage ? "stage" : "goal");
}

void Simulation::tick() {
  const double t = time();
  const double dt = config_.controller.dt;
  const bool offline = config_.mode == Mode::offline;

  while (!arrived_.empty()) {
    InstructionEvent ev = std::move(arrived_.front());
    arrived_.pop_front();
    if (offline) {
      pending_.push_back(std::move(ev));
    } else {
      apply(ev);
    }
  }
  if (!planning_ && sets_.revision > 0 && at_goal()) advance_stage();
  if (offline) {
    if (planning_ && t + kEps >= planning_until_) finish_job();
    const bool stopped = x_.v.norm() < 1e-3;
    const bool slot = job_stage_ || (!pending_.empty() && queue_.empty() && stopped);
    if (!planning_ && slot) {
      start_job(t);
      if (config_.offline_latency <= 0) finish_job();
    }
  }

  const bool executing = !planning_ && !queue_.empty() && sets_.revision > 0;
  TrajectoryRow row;
  row.t = t;
  row.x = x_;
  row.event = active_event_;
  row.revision = sets_.revision;
  row.phase = planning_ ? "planning" : executing ? "moving" : "idle";
  if (sets_.revision > 0) {
    double inside = std::numeric_limits<double>::infinity();
    for (const auto& r : sets_.task.regions) inside = std::min(inside, std::max(0.0, r.violation(x_.p)));
    row.region_violation = inside;
  }
  for (const auto& k : sets_.safe.keepouts) {
    if (!k.region.contains(x_.p, 0.0)) continue;
    double depth = std::numeric_limits<double>::infinity();
    for (const auto& h : k.region.halfspaces()) depth = std::min(depth, h.offset - h.normal.dot(x_.p));
    row.keepout_depth = std::max(row.keepout_depth, depth);
  }
  if (sets_.safe.orientation) row.orientation_violation = sets_.safe.orientation->violation(x_.e);

  control::EEState next;
  bool stepped = false;
  if (executing) {
    try {
      control::StepHints hints;
      hints.region = region_;
      if (previous_) {
        for (std::size_t k = 2; k < previous_->states.size(); ++k) hints.guess.push_back(previous_->states[k].p);
        hints.guess.push_back(previous_->states.back().p);
        hints.previous = &*previous_;
      }
      control::HorizonSolution sol = control::step(x_, u_, sets_, params_, progress_, hints, config_.controller);
      row.slack = std::max({sol.slack[0][0], sol.slack[0][1], sol.slack[0][2]});
      if (sol.degraded) error("degraded", std::string("solver status ") + std::string(math::to_string(sol.status)));
      u_ = sol.inputs[0];
      next = sol.states[1];
      region_ = sol.regions[0];
      previous_ = std::move(sol);
      stepped = true;
    } catch (const std::invalid_argument& e) {
      error("controller", e.what());
    }
  }
  if (!stepped) {
    // hold: brake to rest within the input bounds
    control::ControlInput u;
    u.a = (-x_.v / dt).cwiseMax(-sets_.robot.a_max).cwiseMin(sets_.robot.a_max);
    u.e_acc = (-x_.e_rate / dt).cwiseMax(-sets_.robot.e_acc_max).cwiseMin(sets_.robot.e_acc_max);
    next = control::advance(x_, u, dt);
    u_ = u;
  }
  log_.rows.push_back(std::move(row));
  x_ = next;
  ++tick_;
  if (stepped) progress_ = std::max(progress_, sets_.task.progress_of(x_.p));
}

void Simulation::record_end(const std::string& reason) {
  if (reason == "timeout") error("timeout", "goal not reached within the timeout");
  TrajectoryRow row;
  row.t = time();
  row.x = x_;
  row.event = active_event_;
  row.revision = sets_.revision;
  log_.rows.push_back(row);
  log_.records.push_back({{"type", "end"},
                          {"t", time()},
                          {"reason", reason},
                          {"goal_reached", goal_reached_},
                          {"dt", log_.dt},
                          {"mode", log_.mode}});
}

RunResult run(const Scenario& scenario, const grammar::Dictionary& dict, SimConfig config) {
  config.mode = scenario.mode;
  if (scenario.mode == Mode::offline) config.offline_latency = scenario.offline_latency;
  config.resolver.seed = scenario.seed;
  Simulation sim(scenario.world, dict, scenario.initial, config);
  std::size_t next = 0;
  std::string reason;
  for (;;) {
    const double t = sim.time();
    while (next < scenario.words.size() && scenario.words[next].t <= t + kEps) {
      sim.feed_word(scenario.words[next].word, scenario.words[next].t);
      ++next;
    }
    if (next == scenario.words.size() && !sim.busy()) {
      reason = sim.task_complete() ? "complete" : "idle";
      break;
    }
    if (t >= scenario.timeout - kEps) {
      reason = "timeout";
      break;
    }
    sim.tick();
  }
  sim.record_end(reason);
  RunResult r;
  r.log = sim.log();
  r.metrics = compute_metrics(r.log);
  return r;
}

RunMetrics compute_metrics(const RunLog& log) {
  RunMetrics m;
  std::optional<double> first_word;
  std::optional<double> t_goal;
  std::optional<world::Vec3> final_goal;
  bool reached = false;
  for (const json& r : log.records) {
    const std::string type = r.at("type");
    if (type == "word" && !first_word) first_word = r.at("t").get<double>();
    if (type == "plan") {
      m.t_plan.push_back(r.at("duration"));
      m.t_plan_wall.push_back(r.at("wall"));
    }
    if (type == "event") {
      m.events.push_back({{"t", r.at("t")}, {"id", r.at("event").at("id")}, {"kinds", r.at("kinds")},
                          {"goal", !r.at("event").at("goal").is_null()}});
    }
    if (type == "goal_reached" && r.at("final").get<bool>()) {
      t_goal = r.at("t").get<double>();
      const auto& p = r.at("position");
      final_goal = world::Vec3(p[0], p[1], p[2]);
    }
    if (type == "error") m.errors.push_back(r.at("kind").get<std::string>() + ": " + r.at("what").get<std::string>());
    if (type == "end") reached = r.at("goal_reached").get<bool>();
  }
  m.goal_reached = reached;
  if (!first_word) {
    m.t_task = 0.0;
  } else if (reached && t_goal) {
    m.t_task = *t_goal - *first_word;
  }

  const double dt = log.dt;
  const double window_end = m.t_task && first_word ? *t_goal : (log.rows.empty() ? 0.0 : log.rows.back().t);
  std::optional<std::uint64_t> segment;
  for (std::size_t i = 0; i < log.rows.size(); ++i) {
    const auto& row = log.rows[i];
    const bool last = i + 1 == log.rows.size();
    if (row.phase == "moving" && !last) {
      if (!segment || *segment != row.revision) {
        m.t_traj.push_back(0);
        segment = row.revision;
      }
      m.t_traj.back() += dt;
    } else {
      segment.reset();
    }
    if (first_word && row.phase == "idle" && !last && row.t + kEps >= *first_word && row.t < window_end - kEps) {
      m.t_idle += dt;
    }
    m.max_region_violation = std::max(m.max_region_violation, row.region_violation);
    m.max_keepout_depth = std::max(m.max_keepout_depth, row.keepout_depth);
    m.max_orientation_violation = std::max(m.max_orientation_violation, row.orientation_violation);
    m.max_slack = std::max(m.max_slack, row.slack);
  }

  // mid-motion: first movement until within 1 cm of the final goal
  const world::Vec3 goal = final_goal ? *final_goal : (log.rows.empty() ? world::Vec3::Zero() : log.rows.back().x.p);
  std::size_t start = 0;
  while (start < log.rows.size() && log.rows[start].x.v.norm() <= 1e-9) ++start;
  for (std::size_t i = start; i < log.rows.size(); ++i) {
    if ((log.rows[i].x.p - goal).norm() < 0.01) break;
    const double s = log.rows[i].x.v.norm();
    m.min_mid_motion_speed = m.min_mid_motion_speed ? std::min(*m.min_mid_motion_speed, s) : s;
  }
  return m;
}

json to_json(const RunMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"t_plan", m.t_plan},
          {"t_plan_wall", m.t_plan_wall},
          {"t_traj", m.t_traj},
          {"t_task", opt(m.t_task)},
          {"t_idle", m.t_idle},
          {"events", m.events},
          {"min_mid_motion_speed", opt(m.min_mid_motion_speed)},
          {"max_region_violation", m.max_region_violation},
          {"max_keepout_depth", m.max_keepout_depth},
          {"max_orientation_violation", m.max_orientation_violation},
          {"max_slack", m.max_slack},
          {"goal_reached", m.goal_reached},
          {"errors", m.errors}};
}

namespace {

constexpr const char* kCsvHeader =
    "t,px,py,pz,e1,e2,vx,vy,vz,speed,event,slack,phase,revision,region_violation,keepout_depth,orientation_violation";

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string trajectory_csv(const RunLog& log) {
  std::ostringstream out;
  out << kCsvHeader << '\n';
  for (const auto& r : log.rows) {
    const auto& x = r.x;
    out << num(r.t) << ',' << num(x.p.x()) << ',' << num(x.p.y()) << ',' << num(x.p.z()) << ',' << num(x.e.x()) << ','
        << num(x.e.y()) << ',' << num(x.v.x()) << ',' << num(x.v.y()) << ',' << num(x.v.z()) << ',' << num(x.v.norm())
        << ',' << r.event << ',' << num(r.slack) << ',' << r.phase << ',' << r.revision << ','
        << num(r.region_violation) << ',' << num(r.keepout_depth) << ',' << num(r.orientation_violation) << '\n';
  }
  return out.str();
}

void write_run(const std::filesystem::path& dir, const RunResult& result) {
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "trajectory.csv") << trajectory_csv(result.log);
  std::ofstream events(dir / "events.jsonl");
  for (const auto& r : result.log.records) events << r.dump() << '\n';
  std::ofstream(dir / "corridors.json") << json(result.log.corridors).dump(1) << '\n';
  std::ofstream(dir / "metrics.json") << to_json(result.metrics).dump(2) << '\n';
}

RunLog load_run(const std::filesystem::path& dir) {
  RunLog log;
  std::ifstream csv(dir / "trajectory.csv");
  if (!csv) throw std::runtime_error("no trajectory.csv in " + dir.string());
  std::string line;
  std::getline(csv, line);
  if (line != kCsvHeader) throw std::runtime_error("unexpected trajectory.csv header");
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 17) throw std::runtime_error("malformed trajectory row: " + line);
    TrajectoryRow r;
    auto d = [&](int i) { return std::stod(f[i]); };
    r.t = d(0);
    r.x.p = world::Vec3(d(1), d(2), d(3));
    r.x.e = world::Vec2(d(4), d(5));
    r.x.v = world::Vec3(d(6), d(7), d(8));
    r.event = std::stoull(f[10]);
    r.slack = d(11);
    r.phase = f[12];
    r.revision = std::stoull(f[13]);
    r.region_violation = d(14);
    r.keepout_depth = d(15);
    r.orientation_violation = d(16);
    log.rows.push_back(std::move(r));
  }
  std::ifstream events(dir / "events.jsonl");
  while (std::getline(events, line)) {
    if (line.empty()) continue;
    json r = json::parse(line);
    if (r.value("type", "") == "end") {
      log.dt = r.value("dt", log.dt);
      log.mode = r.value("mode", log.mode);
    }
    log.records.push_back(std::move(r));
  }
  if (std::ifstream c(dir / "corridors.json"); c) {
    for (auto& e : json::parse(c)) log.corridors.push_back(e);
  }
  return log;
}

}  // namespace steer::orchestrator
