#include "steer/resolver/event.hpp"

#include <cmath>

namespace steer::resolver {

using nlohmann::json;

std::string_view to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::manner:
      return "manner";
    case ConstraintKind::target:
      return "target";
    case ConstraintKind::object:
      return "object";
    case ConstraintKind::action:
      return "action";
    case ConstraintKind::safety:
      return "safety";
    case ConstraintKind::sequential:
      return "sequential";
  }
  return "?";
}

bool ConstraintSpec::consistent() const {
  switch (kind) {
    case ConstraintKind::manner:
      return std::holds_alternative<SpeedScale>(payload);
    case ConstraintKind::target:
      return std::holds_alternative<GoalRef>(payload);
    case ConstraintKind::object:
      return std::holds_alternative<ReferentFilter>(payload);
    case ConstraintKind::action:
      return std::holds_alternative<ActionSymbol>(payload);
    case ConstraintKind::safety:
      return std::holds_alternative<OrientationLimit>(payload) || std::holds_alternative<KeepOutRef>(payload);
    case ConstraintKind::sequential:
      return std::holds_alternative<Ordering>(payload);
  }
  return false;
}

std::string_view ConstraintSpec::adaption() const {
  switch (kind) {
    case ConstraintKind::manner:
      return "phi";
    case ConstraintKind::safety:
      return "X_safe";
    default:
      return "X_task";
  }
}

bool CostParams::valid() const {
  auto ok = [](double w) { return std::isfinite(w) && w > 0; };
  return ok(speed_weight) && ok(path_weight) && ok(terminal_weight);
}

json to_json(const ConstraintSpec& c) {
  json j{{"kind", to_string(c.kind)}, {"adaption", c.adaption()}, {"source", c.source}};
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, SpeedScale>) {
          j["speed_scale"] = p.factor;
        } else if constexpr (std::is_same_v<T, GoalRef>) {
          j["goal_ref"] = {{"object", p.object_id}, {"site", p.site}, {"pose", world::to_json(p.pose)}};
        } else if constexpr (std::is_same_v<T, ReferentFilter>) {
          j["referent_filter"] = {{"name", p.name}, {"attributes", p.attributes}, {"object", p.object_id}};
        } else if constexpr (std::is_same_v<T, ActionSymbol>) {
          j["action_symbol"] = p.action;
        } else if constexpr (std::is_same_v<T, OrientationLimit>) {
          j["orientation_box"] = world::to_json(p.box);
        } else if constexpr (std::is_same_v<T, KeepOutRef>) {
          j["keepout_ref"] = p.keepout_id;
        } else {
          j["ordering"] = {p.first, p.second};
        }
      },
      c.payload);
  return j;
}

json to_json(const CostParams& p) {
  return {{"speed_weight", p.speed_weight}, {"path_weight", p.path_weight}, {"terminal_weight", p.terminal_weight}};
}

json to_json(const GoalTarget& g) {
  return {{"pose", world::to_json(g.pose)}, {"object", g.object_id}, {"site", g.site}, {"stage", g.stage}};
}

json to_json(const InstructionEvent& e) {
  json j{{"schema", kEventSchema}, {"id", e.id}, {"t", e.timestamp}, {"source", e.source}};
  j["goal"] = e.goal ? to_json(*e.goal) : json(nullptr);
  json then = json::array();
  for (const auto& g : e.then_goals) then.push_back(to_json(g));
  j["then_goals"] = then;
  json cs = json::array();
  for (const auto& c : e.constraints) cs.push_back(to_json(c));
  j["constraints"] = cs;
  j["cost_params"] = e.cost_params ? to_json(*e.cost_params) : json(nullptr);
  j["supersedes"] = e.supersedes ? json(*e.supersedes) : json(nullptr);
  j["open"] = e.open;
  return j;
}

}  // namespace steer::resolver
