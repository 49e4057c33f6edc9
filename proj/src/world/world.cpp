#include "steer/world/world.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace steer::world {

using nlohmann::json;

bool AngleBox::contains(const Vec2& e, double tol) const { return violation(e) <= tol; }

AngleBox AngleBox::intersect(const AngleBox& other) const { return {lo.cwiseMax(other.lo), hi.cwiseMin(other.hi)}; }

double AngleBox::violation(const Vec2& e) const {
  return std::max({0.0, (lo - e).maxCoeff(), (e - hi).maxCoeff()});
}

bool WorldObject::has(const std::string& attribute) const {
  return std::find(attributes.begin(), attributes.end(), attribute) != attributes.end();
}

const WorldObject* WorldSnapshot::object(const std::string& id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

const KeepOut* WorldSnapshot::keepout(const std::string& id) const {
  for (const auto& k : keepouts) {
    if (k.id == id) return &k;
  }
  return nullptr;
}

std::vector<const WorldObject*> WorldSnapshot::objects_named(const std::string& name) const {
  std::vector<const WorldObject*> out;
  for (const auto& o : objects) {
    if (o.name == name) out.push_back(&o);
  }
  return out;
}

bool WorldSnapshot::knows(const std::string& name) const {
  return std::any_of(objects.begin(), objects.end(), [&](const auto& o) { return o.name == name; }) ||
         std::any_of(obstacles.begin(), obstacles.end(), [&](const auto& o) { return o.name == name; });
}

namespace {

Vec3 vec3(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw WorldError(what + ": expected [x, y, z]");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw WorldError(what + ": expected numbers");
    v(k) = j[k].get<double>();
  }
  return v;
}

Vec2 vec2(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw WorldError(what + ": expected [e1, e2]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Pose pose(const json& j, const std::string& what) {
  Pose p;
  p.position = vec3(j.at("position"), what + ".position");
  if (j.contains("orientation")) p.orientation = vec2(j["orientation"], what + ".orientation");
  return p;
}

// {"box": {"min": [...], "max": [...]}} | {"box": {"center": [...], "extent": [...]}}
// | {"halfspaces": [{"normal": [...], "offset": b}, ...]}
ConvexRegion region(const json& j, const std::string& what) {
  if (j.contains("box")) {
    const json& b = j["box"];
    if (b.contains("min")) return ConvexRegion::box(vec3(b.at("min"), what), vec3(b.at("max"), what));
    const Vec3 c = vec3(b.at("center"), what);
    const Vec3 e = vec3(b.at("extent"), what);
    return ConvexRegion::box(c - 0.5 * e, c + 0.5 * e);
  }
  if (j.contains("halfspaces")) {
    std::vector<Halfspace> hs;
    for (const auto& h : j["halfspaces"]) hs.push_back({vec3(h.at("normal"), what), h.at("offset").get<double>()});
    try {
      return ConvexRegion(std::move(hs));
    } catch (const GeometryError& e) {
      throw WorldError(what + ": " + e.what());
    }
  }
  throw WorldError(what + ": expected box or halfspaces");
}

Box checked_bounds(const ConvexRegion& r, const std::string& what) {
  auto b = r.bounds();
  if (!b || b->volume() <= 0) throw WorldError(what + ": region must be bounded and nonempty");
  return *b;
}

}  // namespace

WorldSnapshot load_world(const json& doc) {
  try {
    if (!doc.is_object()) throw WorldError("world document must be an object");
    if (doc.value("schema", std::string(kWorldSchema)) != kWorldSchema) {
      throw WorldError("unsupported schema " + doc["schema"].dump());
    }
    WorldSnapshot w;
    w.name = doc.value("name", "");
    w.workspace = region(doc.at("workspace"), "workspace");
    w.workspace_box = checked_bounds(w.workspace, "workspace");

    for (const auto& o : doc.value("objects", json::array())) {
      WorldObject obj;
      obj.id = o.at("id").get<std::string>();
      obj.name = o.at("name").get<std::string>();
      obj.attributes = o.value("attributes", std::vector<std::string>{});
      obj.support = o.value("support", "");
      obj.position = vec3(o.at("position"), obj.id + ".position");
      if (o.contains("grasps")) {
        for (const auto& [name, g] : o["grasps"].items()) obj.grasps[name] = pose(g, obj.id + ".grasps." + name);
      }
      if (o.contains("place")) obj.place = pose(o["place"], obj.id + ".place");
      if (!w.workspace.contains(obj.position)) throw WorldError("object " + obj.id + " lies outside the workspace");
      for (const auto& [name, g] : obj.grasps) {
        if (!w.workspace.contains(g.position)) throw WorldError("grasp " + obj.id + "." + name + " outside workspace");
      }
      if (w.object(obj.id)) throw WorldError("duplicate object id " + obj.id);
      w.objects.push_back(std::move(obj));
    }
    for (const auto& o : doc.value("obstacles", json::array())) {
      Obstacle ob;
      ob.id = o.at("id").get<std::string>();
      ob.name = o.value("name", ob.id);
      ob.region = region(o, ob.id);
      ob.box = checked_bounds(ob.region, ob.id);
      w.obstacles.push_back(std::move(ob));
    }
    for (const auto& o : doc.value("keepouts", json::array())) {
      KeepOut k;
      k.id = o.at("id").get<std::string>();
      k.referent = o.at("referent").get<std::string>();
      k.relation = o.value("relation", "over");
      k.region = region(o, k.id);
      k.box = checked_bounds(k.region, k.id);
      w.keepouts.push_back(std::move(k));
    }
    if (doc.contains("locations")) {
      for (const auto& [name, l] : doc["locations"].items()) {
        w.locations[name] = pose(l, "locations." + name);
        if (!w.workspace.contains(w.locations[name].position)) {
          throw WorldError("location " + name + " outside workspace");
        }
      }
    }
    return w;
  } catch (const json::exception& e) {
    throw WorldError(std::string("world schema: ") + e.what());
  }
}

WorldSnapshot load_world_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw WorldError(std::string("world document: ") + e.what());
  }
  return load_world(doc);
}

WorldSnapshot load_world_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw WorldError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_world_text(ss.str());
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

json to_json(const Pose& p) { return {{"position", to_json(p.position)}, {"orientation", to_json(p.orientation)}}; }

json to_json(const AngleBox& b) { return {{"lo", to_json(b.lo)}, {"hi", to_json(b.hi)}}; }

json to_json(const Box& box) { return {{"min", to_json(box.lo)}, {"max", to_json(box.hi)}}; }

json to_json(const ConvexRegion& region) {
  json hs = json::array();
  for (const auto& h : region.halfspaces()) hs.push_back({{"normal", to_json(h.normal)}, {"offset", h.offset}});
  return {{"halfspaces", hs}};
}

json to_json(const WorldSnapshot& w) {
  auto pose_json = [](const Pose& p) { return to_json(p); };
  json doc{{"schema", kWorldSchema}, {"name", w.name}, {"workspace", to_json(w.workspace)}};
  json objects = json::array();
  for (const auto& o : w.objects) {
    json grasps = json::object();
    for (const auto& [name, g] : o.grasps) grasps[name] = pose_json(g);
    json jo{{"id", o.id},         {"name", o.name},     {"attributes", o.attributes},
            {"support", o.support}, {"position", to_json(o.position)}, {"grasps", grasps}};
    if (o.place) jo["place"] = pose_json(*o.place);
    objects.push_back(jo);
  }
  doc["objects"] = objects;
  json obstacles = json::array();
  for (const auto& o : w.obstacles) {
    json jo = to_json(o.region);
    jo["id"] = o.id;
    jo["name"] = o.name;
    obstacles.push_back(jo);
  }
  doc["obstacles"] = obstacles;
  json keepouts = json::array();
  for (const auto& k : w.keepouts) {
    json jk = to_json(k.region);
    jk["id"] = k.id;
    jk["referent"] = k.referent;
    jk["relation"] = k.relation;
    keepouts.push_back(jk);
  }
  doc["keepouts"] = keepouts;
  json locations = json::object();
  for (const auto& [name, l] : w.locations) locations[name] = pose_json(l);
  doc["locations"] = locations;
  return doc;
}

}  // namespace steer::world
