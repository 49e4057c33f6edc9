#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "steer/resolver/event.hpp"
#include "steer/world/world.hpp"

namespace steer::planner {

using world::AngleBox;
using world::Box;
using world::ConvexRegion;
using world::KeepOut;
using world::Pose;
using world::Vec2;
using world::Vec3;
using world::WorldSnapshot;

// Instruction-independent limits of the simulated end effector.
struct RobotLimits {
  double v_max = 1.0;       // m/s, Euclidean
  double a_max = 5.0;       // m/s^2, per axis
  double e_rate_max = 2.0;  // rad/s, per angle
  double e_acc_max = 10.0;  // rad/s^2, per angle

  bool valid() const { return v_max > 0 && a_max > 0 && e_rate_max > 0 && e_acc_max > 0; }
};

struct Corridor {
  std::vector<ConvexRegion> regions;
  std::vector<Box> boxes;  // the same regions as boxes
  std::vector<Vec3> via_points;
  std::vector<AngleBox> orientation_bounds;  // one per region
  // The start was not in free space; regions[0] is the nearest free box and
  // the controller's slack absorbs the gap.
  bool start_outside = false;

  double length() const;
  // Point at arc length s along the via-point polyline (clamped).
  Vec3 point_at(double s) const;
  // Arc length of the polyline point closest to p.
  double progress_of(const Vec3& p) const;
};

struct SafeSet {
  std::vector<KeepOut> keepouts;  // active keep-outs
  std::optional<AngleBox> orientation;
};

struct AdmissibleSets {
  Corridor task;
  SafeSet safe;
  RobotLimits robot;
  Pose goal;
  Pose start;
  std::uint64_t revision = 0;
};

struct PlannerConfig {
  double grid = 0.05;
  double inflation = 0.02;
  double orientation_bound = 1.0;
  int shortcut_passes = 30;
};

class NoCorridorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Free-space box decomposition, adjacency graph, shortest region chain and
// string-pulled via-points. Throws NoCorridorError when the goal is not in
// free space or unreachable.
Corridor plan_corridor(const Pose& start, const Pose& goal, const WorldSnapshot& world,
                       const std::vector<KeepOut>& keepouts, const PlannerConfig& config = {},
                       const std::optional<AngleBox>& orientation = std::nullopt);

AdmissibleSets plan_initial(const Pose& start, const Pose& goal, const WorldSnapshot& world, const SafeSet& safe = {},
                            const PlannerConfig& config = {});

// The safe set with the event's keep-outs and orientation limits added.
SafeSet extend_safe(const SafeSet& prior, const resolver::InstructionEvent& event, const WorldSnapshot& world);

// New sets starting at `current`. Goal from the event (or kept), safe set
// extended by the event's safety constraints. Events with neither goal nor
// safety constraints return `prior` unchanged.
AdmissibleSets replan_from(const Pose& current, const resolver::InstructionEvent& event, const AdmissibleSets& prior,
                           const WorldSnapshot& world, const PlannerConfig& config = {});

// Checks the Corridor invariants; returns an empty string when they hold.
std::string check_corridor(const Corridor& corridor, const Pose& start, const Pose& goal,
                           const std::vector<KeepOut>& keepouts);

nlohmann::json to_json(const Corridor& corridor);
nlohmann::json to_json(const AdmissibleSets& sets);

}  // namespace steer::planner
