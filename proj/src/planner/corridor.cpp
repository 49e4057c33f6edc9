#include "steer/planner/corridor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace steer::planner {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Sorted, deduplicated grid coordinates on one axis.
std::vector<double> axis_lines(double lo, double hi, double step, const std::vector<double>& extra) {
  std::vector<double> v;
  for (int i = 0;; ++i) {
    const double x = lo + i * step;
    if (x >= hi - 1e-9) break;
    v.push_back(x);
  }
  v.push_back(hi);
  for (double x : extra) {
    if (x > lo + 1e-9 && x < hi - 1e-9) v.push_back(x);
  }
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v) {
    if (out.empty() || x - out.back() > 1e-7) out.push_back(x);
  }
  return out;
}

struct Grid {
  std::array<std::vector<double>, 3> lines;
  std::array<int, 3> n{};
  std::vector<char> free;

  int index(int i, int j, int k) const { return (k * n[1] + j) * n[0] + i; }
  bool is_free(int i, int j, int k) const { return free[index(i, j, k)] != 0; }
  Box cell_box(const std::array<int, 3>& lo, const std::array<int, 3>& hi) const {
    // hi exclusive
    return {Vec3(lines[0][lo[0]], lines[1][lo[1]], lines[2][lo[2]]),
            Vec3(lines[0][hi[0]], lines[1][hi[1]], lines[2][hi[2]])};
  }
};

Grid build_grid(const Box& ws, const std::vector<Box>& blocked, double step) {
  Grid g;
  for (int a = 0; a < 3; ++a) {
    std::vector<double> extra;
    for (const auto& b : blocked) {
      extra.push_back(b.lo(a));
      extra.push_back(b.hi(a));
    }
    g.lines[a] = axis_lines(ws.lo(a), ws.hi(a), step, extra);
    g.n[a] = static_cast<int>(g.lines[a].size()) - 1;
  }
  g.free.assign(static_cast<std::size_t>(g.n[0]) * g.n[1] * g.n[2], 1);
  for (const auto& b : blocked) {
    std::array<int, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      const auto& l = g.lines[a];
      lo[a] = static_cast<int>(std::lower_bound(l.begin(), l.end(), b.lo(a) - 1e-7) - l.begin());
      hi[a] = static_cast<int>(std::lower_bound(l.begin(), l.end(), b.hi(a) - 1e-7) - l.begin());
      lo[a] = std::clamp(lo[a], 0, g.n[a]);
      hi[a] = std::clamp(hi[a], 0, g.n[a]);
    }
    for (int k = lo[2]; k < hi[2]; ++k)
      for (int j = lo[1]; j < hi[1]; ++j)
        for (int i = lo[0]; i < hi[0]; ++i) g.free[g.index(i, j, k)] = 0;
  }
  return g;
}

struct CellBox {
  std::array<int, 3> lo;
  std::array<int, 3> hi;  // exclusive
};

bool slab_free(const Grid& g, const CellBox& b, int axis, int layer) {
  std::array<int, 3> lo = b.lo, hi = b.hi;
  lo[axis] = layer;
  hi[axis] = layer + 1;
  for (int k = lo[2]; k < hi[2]; ++k)
    for (int j = lo[1]; j < hi[1]; ++j)
      for (int i = lo[0]; i < hi[0]; ++i) {
        if (!g.is_free(i, j, k)) return false;
      }
  return true;
}

// Grows a box from one cell, one layer per direction in turn, until no
// face can move.
CellBox grow(const Grid& g, int i, int j, int k) {
  CellBox b{{i, j, k}, {i + 1, j + 1, k + 1}};
  bool moved = true;
  while (moved) {
    moved = false;
    for (int axis = 0; axis < 3; ++axis) {
      if (b.hi[axis] < g.n[axis] && slab_free(g, b, axis, b.hi[axis])) {
        ++b.hi[axis];
        moved = true;
      }
      if (b.lo[axis] > 0 && slab_free(g, b, axis, b.lo[axis] - 1)) {
        --b.lo[axis];
        moved = true;
      }
    }
  }
  return b;
}

std::vector<Box> decompose(const Grid& g) {
  std::vector<char> covered(g.free.size(), 0);
  std::vector<Box> boxes;
  for (int k = 0; k < g.n[2]; ++k) {
    for (int j = 0; j < g.n[1]; ++j) {
      for (int i = 0; i < g.n[0]; ++i) {
        const int idx = g.index(i, j, k);
        if (!g.free[idx] || covered[idx]) continue;
        CellBox b = grow(g, i, j, k);
        for (int z = b.lo[2]; z < b.hi[2]; ++z)
          for (int y = b.lo[1]; y < b.hi[1]; ++y)
            for (int x = b.lo[0]; x < b.hi[0]; ++x) covered[g.index(x, y, z)] = 1;
        boxes.push_back(g.cell_box(b.lo, b.hi));
      }
    }
  }
  return boxes;
}

Box overlap(const Box& a, const Box& b) { return {a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi)}; }

// Adjacent when the boxes overlap in a volume or share a face of positive area.
bool adjacent(const Box& a, const Box& b) {
  const Vec3 e = overlap(a, b).extent();
  if ((e.array() < -1e-9).any()) return false;
  int thin = 0;
  for (int k = 0; k < 3; ++k) {
    if (e(k) < 1e-6) ++thin;
  }
  return thin == 0 || (thin == 1 && (e.array() > 1e-6).count() == 2);
}

Vec3 clamp_to(const Box& b, const Vec3& p) { return p.cwiseMax(b.lo).cwiseMin(b.hi); }

double box_distance(const Box& b, const Vec3& p) { return (clamp_to(b, p) - p).norm(); }

// Point of `box` minimizing |a - x| + |x - c|: searched along the clamped
// segment a->c, which is exact whenever the segment meets the box.
Vec3 pull(const Box& box, const Vec3& a, const Vec3& c) {
  auto at = [&](double t) { return clamp_to(box, a + t * (c - a)); };
  auto cost = [&](double t) {
    const Vec3 x = at(t);
    return (x - a).norm() + (c - x).norm();
  };
  double lo = 0, hi = 1;
  for (int it = 0; it < 60; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (cost(m1) <= cost(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  return at(0.5 * (lo + hi));
}

}  // namespace

double Corridor::length() const {
  double s = 0;
  for (std::size_t i = 1; i < via_points.size(); ++i) s += (via_points[i] - via_points[i - 1]).norm();
  return s;
}

Vec3 Corridor::point_at(double s) const {
  if (via_points.empty()) return Vec3::Zero();
  if (s <= 0) return via_points.front();
  for (std::size_t i = 1; i < via_points.size(); ++i) {
    const double seg = (via_points[i] - via_points[i - 1]).norm();
    if (s <= seg && seg > 0) return via_points[i - 1] + (s / seg) * (via_points[i] - via_points[i - 1]);
    s -= seg;
  }
  return via_points.back();
}

double Corridor::progress_of(const Vec3& p) const {
  double best = kInf, best_s = 0, acc = 0;
  for (std::size_t i = 1; i < via_points.size(); ++i) {
    const Vec3 d = via_points[i] - via_points[i - 1];
    const double len = d.norm();
    double t = len > 0 ? std::clamp((p - via_points[i - 1]).dot(d) / (len * len), 0.0, 1.0) : 0.0;
    const double dist = (via_points[i - 1] + t * d - p).norm();
    if (dist < best - 1e-12) {
      best = dist;
      best_s = acc + t * len;
    }
    acc += len;
  }
  return best_s;
}

Corridor plan_corridor(const Pose& start, const Pose& goal, const WorldSnapshot& world,
                       const std::vector<KeepOut>& keepouts, const PlannerConfig& config,
                       const std::optional<AngleBox>& orientation) {
  const Box& ws = world.workspace_box;
  std::vector<Box> blocked;
  for (const auto& o : world.obstacles) blocked.push_back(o.box.inflated(config.inflation));
  for (const auto& k : keepouts) blocked.push_back(k.box.inflated(config.inflation));

  const Grid grid = build_grid(ws, blocked, config.grid);
  const std::vector<Box> boxes = decompose(grid);
  const int nb = static_cast<int>(boxes.size());

  auto in_free = [&](const Vec3& p) {
    if (!ws.contains(p)) return false;
    return std::none_of(blocked.begin(), blocked.end(), [&](const Box& b) {
      return (p.array() > b.lo.array() + 1e-9).all() && (p.array() < b.hi.array() - 1e-9).all();
    });
  };

  std::vector<int> goal_boxes, start_boxes;
  for (int i = 0; i < nb; ++i) {
    if (boxes[i].contains(goal.position)) goal_boxes.push_back(i);
    if (boxes[i].contains(start.position)) start_boxes.push_back(i);
  }
  if (goal_boxes.empty() || !in_free(goal.position)) throw NoCorridorError("goal is not in free space");
  bool start_outside = false;
  if (start_boxes.empty()) {
    start_outside = true;
    int nearest = 0;
    double d = kInf;
    for (int i = 0; i < nb; ++i) {
      const double di = box_distance(boxes[i], start.position);
      if (di < d - 1e-12) {
        d = di;
        nearest = i;
      }
    }
    if (nb == 0) throw NoCorridorError("no free space");
    start_boxes.push_back(nearest);
  }

  // Dijkstra over boxes; virtual source/sink costs are point-to-centre distances.
  std::vector<std::vector<int>> adj(nb);
  for (int i = 0; i < nb; ++i)
    for (int j = i + 1; j < nb; ++j) {
      if (adjacent(boxes[i], boxes[j])) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  std::vector<double> dist(nb, kInf);
  std::vector<int> prev(nb, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (int s : start_boxes) {
    dist[s] = (boxes[s].center() - start.position).norm();
    pq.push({dist[s], s});
  }
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (int v : adj[u]) {
      const double nd = d + (boxes[u].center() - boxes[v].center()).norm();
      if (nd < dist[v] - 1e-12) {
        dist[v] = nd;
        prev[v] = u;
        pq.push({nd, v});
      }
    }
  }
  int last = -1;
  double best = kInf;
  for (int gbox : goal_boxes) {
    const double d = dist[gbox] + (boxes[gbox].center() - goal.position).norm();
    if (d < best - 1e-12) {
      best = d;
      last = gbox;
    }
  }
  if (last < 0 || !std::isfinite(best)) throw NoCorridorError("goal unreachable from start");

  std::vector<int> chain;
  for (int v = last; v >= 0; v = prev[v]) chain.push_back(v);
  std::reverse(chain.begin(), chain.end());
  // Drop a start box when the next box already holds the start, and skip ahead
  // to the farthest chain box adjacent to the current one.
  std::vector<int> path;
  std::size_t i = 0;
  while (i + 1 < chain.size() && !start_outside && boxes[chain[i + 1]].contains(start.position)) ++i;
  path.push_back(chain[i]);
  while (i + 1 < chain.size()) {
    std::size_t next = i + 1;
    for (std::size_t j = chain.size() - 1; j > i + 1; --j) {
      if (adjacent(boxes[chain[i]], boxes[chain[j]])) {
        next = j;
        break;
      }
    }
    i = next;
    path.push_back(chain[i]);
  }
  // Trim boxes after the first one that contains the goal.
  for (std::size_t k = 0; k < path.size(); ++k) {
    if (boxes[path[k]].contains(goal.position)) {
      path.resize(k + 1);
      break;
    }
  }

  Corridor c;
  c.start_outside = start_outside;
  AngleBox bound = AngleBox::symmetric(config.orientation_bound);
  if (orientation) bound = bound.intersect(*orientation);
  for (int b : path) {
    c.boxes.push_back(boxes[b]);
    c.regions.push_back(ConvexRegion::box(boxes[b]));
    c.orientation_bounds.push_back(bound);
  }
  // Via points: start, one crossing per consecutive pair, goal.
  std::vector<Box> crossings;
  for (std::size_t k = 0; k + 1 < c.boxes.size(); ++k) crossings.push_back(overlap(c.boxes[k], c.boxes[k + 1]));
  c.via_points.push_back(start.position);
  for (const auto& x : crossings) c.via_points.push_back(x.center());
  c.via_points.push_back(goal.position);
  for (int pass = 0; pass < config.shortcut_passes; ++pass) {
    for (std::size_t k = 0; k < crossings.size(); ++k) {
      c.via_points[k + 1] = pull(crossings[k], c.via_points[k], c.via_points[k + 2]);
    }
  }
  return c;
}

AdmissibleSets plan_initial(const Pose& start, const Pose& goal, const WorldSnapshot& world, const SafeSet& safe,
                            const PlannerConfig& config) {
  AdmissibleSets sets;
  sets.safe = safe;
  sets.goal = goal;
  sets.start = start;
  sets.task = plan_corridor(start, goal, world, safe.keepouts, config, safe.orientation);
  sets.revision = 1;
  return sets;
}

SafeSet extend_safe(const SafeSet& prior, const resolver::InstructionEvent& event, const WorldSnapshot& world) {
  SafeSet safe = prior;
  for (const auto& c : event.constraints) {
    if (c.kind != resolver::ConstraintKind::safety) continue;
    if (const auto* k = std::get_if<resolver::KeepOutRef>(&c.payload)) {
      const KeepOut* ko = world.keepout(k->keepout_id);
      if (!ko) throw NoCorridorError("unknown keep-out " + k->keepout_id);
      const bool present = std::any_of(safe.keepouts.begin(), safe.keepouts.end(),
                                       [&](const KeepOut& x) { return x.id == ko->id; });
      if (!present) safe.keepouts.push_back(*ko);
    } else if (const auto* o = std::get_if<resolver::OrientationLimit>(&c.payload)) {
      safe.orientation = safe.orientation ? safe.orientation->intersect(o->box) : o->box;
    }
  }
  return safe;
}

AdmissibleSets replan_from(const Pose& current, const resolver::InstructionEvent& event, const AdmissibleSets& prior,
                           const WorldSnapshot& world, const PlannerConfig& config) {
  SafeSet safe = extend_safe(prior.safe, event, world);
  const bool changed =
      event.goal.has_value() || std::any_of(event.constraints.begin(), event.constraints.end(),
                                            [](const auto& c) { return c.kind == resolver::ConstraintKind::safety; });
  if (!changed) return prior;
  AdmissibleSets sets;
  sets.safe = std::move(safe);
  sets.robot = prior.robot;
  sets.goal = event.goal ? event.goal->pose : prior.goal;
  sets.start = current;
  sets.task = plan_corridor(current, sets.goal, world, sets.safe.keepouts, config, sets.safe.orientation);
  sets.revision = prior.revision + 1;
  return sets;
}

std::string check_corridor(const Corridor& c, const Pose& start, const Pose& goal,
                           const std::vector<KeepOut>& keepouts) {
  if (c.regions.empty()) return "no regions";
  if (c.regions.size() != c.orientation_bounds.size()) return "orientation bounds per region";
  if (c.via_points.size() != c.regions.size() + 1) return "via point count";
  if (!c.start_outside && !c.regions.front().contains(start.position)) return "start not in first region";
  if (!c.regions.back().contains(goal.position)) return "goal not in last region";
  for (std::size_t k = 0; k + 1 < c.regions.size(); ++k) {
    if (!c.regions[k].contains(c.via_points[k + 1], 1e-9) || !c.regions[k + 1].contains(c.via_points[k + 1], 1e-9)) {
      return "via point " + std::to_string(k + 1) + " not shared";
    }
  }
  for (const auto& r : c.regions) {
    for (const auto& k : keepouts) {
      if (world::intersect_nonempty(r, k.region)) return "region meets keep-out " + k.id;
    }
  }
  return {};
}

nlohmann::json to_json(const Corridor& c) {
  using nlohmann::json;
  json regions = json::array();
  for (std::size_t k = 0; k < c.regions.size(); ++k) {
    json r = world::to_json(c.regions[k]);
    r["box"] = world::to_json(c.boxes[k]);
    r["orientation"] = world::to_json(c.orientation_bounds[k]);
    regions.push_back(r);
  }
  json via = json::array();
  for (const auto& v : c.via_points) via.push_back(world::to_json(v));
  return {{"regions", regions}, {"via_points", via}, {"length", c.length()}, {"start_outside", c.start_outside}};
}

nlohmann::json to_json(const AdmissibleSets& s) {
  using nlohmann::json;
  json keepouts = json::array();
  for (const auto& k : s.safe.keepouts) keepouts.push_back({{"id", k.id}, {"box", world::to_json(k.box)}});
  return {{"revision", s.revision},
          {"task", to_json(s.task)},
          {"safe", {{"keepouts", keepouts},
                    {"orientation", s.safe.orientation ? world::to_json(*s.safe.orientation) : json(nullptr)}}},
          {"robot",
           {{"v_max", s.robot.v_max}, {"a_max", s.robot.a_max}, {"e_rate_max", s.robot.e_rate_max},
            {"e_acc_max", s.robot.e_acc_max}}},
          {"goal", world::to_json(s.goal)},
          {"start", world::to_json(s.start)}};
}

}  // namespace steer::planner
