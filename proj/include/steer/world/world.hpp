#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "steer/world/region.hpp"

namespace steer::world {

using Vec2 = Eigen::Vector2d;

// Box on the two orientation-error angles (rad).
struct AngleBox {
  Vec2 lo = Vec2::Constant(-1.0);
  Vec2 hi = Vec2::Constant(1.0);

  static AngleBox symmetric(double bound) { return {Vec2::Constant(-bound), Vec2::Constant(bound)}; }
  bool contains(const Vec2& e, double tol = kMembershipTol) const;
  AngleBox intersect(const AngleBox& other) const;
  Vec2 clamp(const Vec2& e) const { return e.cwiseMax(lo).cwiseMin(hi); }
  // Largest componentwise distance outside the box (0 inside).
  double violation(const Vec2& e) const;
  friend bool operator==(const AngleBox& a, const AngleBox& b) { return a.lo == b.lo && a.hi == b.hi; }
};

// End-effector target: position plus the two orientation-error angles
// relative to upright.
struct Pose {
  Vec3 position = Vec3::Zero();
  Vec2 orientation = Vec2::Zero();
};

struct WorldObject {
  std::string id;
  std::string name;
  std::vector<std::string> attributes;  // colors, sides ("left", "right")
  std::string support;                  // id of the object or obstacle it rests on
  Vec3 position = Vec3::Zero();
  std::map<std::string, Pose> grasps;   // named grasp poses
  std::optional<Pose> place;            // drop-off pose for containers

  bool has(const std::string& attribute) const;
};

struct Obstacle {
  std::string id;
  std::string name;
  ConvexRegion region;
  Box box;  // axis-aligned hull of region
};

// Named no-go volume that an instruction can switch on ("avoid going over
// the laptop"). Inactive until an event refers to it.
struct KeepOut {
  std::string id;
  std::string referent;  // object/obstacle name it is attached to
  std::string relation;  // "over", ...
  ConvexRegion region;
  Box box;
};

class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorldSnapshot {
  std::string name;
  ConvexRegion workspace;
  Box workspace_box;
  std::vector<WorldObject> objects;
  std::vector<Obstacle> obstacles;
  std::vector<KeepOut> keepouts;
  std::map<std::string, Pose> locations;  // e.g. "handover"

  const WorldObject* object(const std::string& id) const;
  const KeepOut* keepout(const std::string& id) const;
  std::vector<const WorldObject*> objects_named(const std::string& name) const;
  // Any object or obstacle carries this name.
  bool knows(const std::string& name) const;
};

inline constexpr const char* kWorldSchema = "steer.world/1";

WorldSnapshot load_world(const nlohmann::json& doc);
WorldSnapshot load_world_text(const std::string& text);
WorldSnapshot load_world_file(const std::filesystem::path& path);
nlohmann::json to_json(const WorldSnapshot& world);

nlohmann::json to_json(const ConvexRegion& region);
nlohmann::json to_json(const Box& box);
nlohmann::json to_json(const Vec3& v);
nlohmann::json to_json(const Vec2& v);
nlohmann::json to_json(const Pose& pose);
nlohmann::json to_json(const AngleBox& box);

}  // namespace steer::world
