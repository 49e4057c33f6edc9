#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "steer/world/world.hpp"

namespace steer::resolver {

using world::AngleBox;
using world::Pose;

enum class ConstraintKind { manner, target, object, action, safety, sequential };

std::string_view to_string(ConstraintKind kind);

// Payloads, one per taxonomy row.
struct SpeedScale {
  double factor = 1.0;
};
struct GoalRef {
  std::string object_id;  // object or location id
  std::string site;       // grasp name, "place", location name
  Pose pose;
};
struct ReferentFilter {
  std::string name;
  std::vector<std::string> attributes;
  std::string object_id;  // the object the filter selects
};
struct ActionSymbol {
  std::string action;
};
struct OrientationLimit {
  AngleBox box;
};
struct KeepOutRef {
  std::string keepout_id;
};
struct Ordering {
  std::string first;
  std::string second;
};

using Payload = std::variant<SpeedScale, GoalRef, ReferentFilter, ActionSymbol, OrientationLimit, KeepOutRef, Ordering>;

struct ConstraintSpec {
  ConstraintKind kind = ConstraintKind::manner;
  Payload payload;
  std::string source;  // serialized modifier it came from

  // kind and payload agree (manner->SpeedScale, target->GoalRef, ...).
  bool consistent() const;
  // Where the constraint acts: "phi", "X_task" or "X_safe".
  std::string_view adaption() const;
};

struct CostParams {
  double speed_weight = 1.0;
  double path_weight = 1.0;
  double terminal_weight = 1.0;

  bool valid() const;
  friend bool operator==(const CostParams&, const CostParams&) = default;
};

// One stop of the goal queue.
struct GoalTarget {
  Pose pose;
  std::string object_id;
  std::string site;   // "side", "top", "handover", ...
  std::string stage;  // "grasp", "handover", "place", "push", "move"
};

struct InstructionEvent {
  std::uint64_t id = 0;
  double timestamp = 0;
  std::optional<GoalTarget> goal;
  std::vector<GoalTarget> then_goals;  // queued after goal (sequential tasks)
  std::vector<ConstraintSpec> constraints;
  std::optional<CostParams> cost_params;
  std::optional<std::uint64_t> supersedes;
  std::string source;             // serialized parse
  std::vector<std::string> open;  // modifiers that could not be classified

  bool has_content() const { return goal.has_value() || !constraints.empty() || cost_params.has_value(); }
};

inline constexpr const char* kEventSchema = "steer.event/1";

nlohmann::json to_json(const ConstraintSpec& spec);
nlohmann::json to_json(const CostParams& params);
nlohmann::json to_json(const GoalTarget& goal);
nlohmann::json to_json(const InstructionEvent& event);

}  // namespace steer::resolver
