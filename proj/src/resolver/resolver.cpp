#include "steer/resolver/resolver.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace steer::resolver {

using grammar::TermKind;
using world::KeepOut;
using world::Vec3;
using world::WorldObject;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

[[noreturn]] void unresolved(const std::string& what) { throw ResolveError(ResolveFailure::unresolved_referent, what); }

bool is_frame(const Term& t, const char* name) { return t.kind == TermKind::frame && t.name == name; }

const Term* arg(const Term& t, std::size_t i) { return i < t.args.size() ? &t.args[i] : nullptr; }

// Frames that are constraints rather than tasks when they head a clause.
bool constraint_frame(const Term& t) {
  return is_frame(t, "keep") || is_frame(t, "not") || is_frame(t, "avoid") || is_frame(t, "move");
}

Vec3 anchor_position(const std::string& name, const WorldSnapshot& world, const ResolverConfig& config) {
  if (!world.objects_named(name).empty()) {
    return world.object(ground_referent(Term::referent(name), world, config))->position;
  }
  for (const auto& o : world.obstacles) {
    if (o.name == name || o.id == name) return o.box.center();
  }
  unresolved("no " + name + " in the world");
}

bool matches_support(const WorldObject& o, const std::string& name, const WorldSnapshot& world) {
  if (o.support == name) return true;
  if (const WorldObject* s = world.object(o.support)) return s->name == name;
  for (const auto& ob : world.obstacles) {
    if (ob.id == o.support && ob.name == name) return true;
  }
  return false;
}

}  // namespace

std::size_t seeded_choice(std::size_t n, std::uint64_t seed, const std::string& salt) {
  if (n == 0) return 0;
  std::mt19937_64 rng(seed ^ fnv1a(salt));
  return static_cast<std::size_t>(rng() % n);
}

namespace {

std::vector<const WorldObject*> candidates_for(const Term& referent, const WorldSnapshot& world,
                                               const ResolverConfig& config, const Term* anaphor) {
  if (referent.kind != TermKind::referent) unresolved("not a referent: " + grammar::serialize(referent));
  if (referent.name == "it") {
    if (!anaphor || anaphor->name == "it") unresolved("\"it\" has no antecedent");
    return candidates_for(*anaphor, world, config, nullptr);
  }
  std::string name = referent.name;
  if (name == "one") {
    if (!anaphor) unresolved("\"one\" has no antecedent");
    name = anaphor->name;
  }
  std::vector<const WorldObject*> candidates = world.objects_named(name);
  if (candidates.empty()) unresolved("no " + name + " in the world");

  for (const Term& m : referent.modifiers) {
    std::vector<const WorldObject*> kept;
    if (m.kind == TermKind::referent) {
      for (const auto* o : candidates) {
        if (o->has(m.name)) kept.push_back(o);
      }
    } else if (is_frame(m, "on") && arg(m, 0)) {
      const std::string& where = arg(m, 0)->name;
      const bool place = world.knows(where);
      for (const auto* o : candidates) {
        if (place ? matches_support(*o, where, world) : o->has(where)) kept.push_back(o);
      }
    } else if ((is_frame(m, "by") || is_frame(m, "from")) && arg(m, 1)) {
      const Vec3 at = anchor_position(arg(m, 1)->name, world, config);
      double best = std::numeric_limits<double>::infinity();
      for (const auto* o : candidates) best = std::min(best, (o->position - at).norm());
      for (const auto* o : candidates) {
        if ((o->position - at).norm() <= best + 1e-9) kept.push_back(o);
      }
    } else {
      unresolved("unsupported object modifier " + grammar::serialize(m));
    }
    if (kept.empty()) unresolved("no " + grammar::serialize(referent) + " in the world");
    candidates = std::move(kept);
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  return candidates;
}

std::string pick(const std::vector<const WorldObject*>& candidates, const Term& referent, const ResolverConfig& config) {
  return candidates[seeded_choice(candidates.size(), config.seed, grammar::serialize(referent))]->id;
}

}  // namespace

std::string ground_referent(const Term& referent, const WorldSnapshot& world, const ResolverConfig& config,
                            const Term* anaphor) {
  return pick(candidates_for(referent, world, config, anaphor), referent, config);
}

namespace {

// The placement target of an action (the X of placeObject(.., .., in(X))).
const Term* target_term(const Term& action) {
  if (action.name == "placeObject" && action.args.size() > 2 && !action.args[2].args.empty()) {
    return &action.args[2].args[0];
  }
  return nullptr;
}

}  // namespace

std::optional<ConstraintKind> classify(const Term& m, const Term& clause) {
  if (m.kind != TermKind::frame) return std::nullopt;
  if (is_frame(m, "move") && arg(m, 1) && (arg(m, 1)->name == "faster" || arg(m, 1)->name == "slower")) {
    return ConstraintKind::manner;
  }
  if (is_frame(m, "keep") && arg(m, 2) && arg(m, 2)->name == "upright") return ConstraintKind::safety;
  if (is_frame(m, "not") && arg(m, 0) && is_frame(*arg(m, 0), "spill")) return ConstraintKind::safety;
  if (is_frame(m, "avoid") && arg(m, 1) && is_frame(*arg(m, 1), "go")) {
    const Term* where = arg(*arg(m, 1), 1);
    if (where && where->kind == TermKind::frame && !where->args.empty()) return ConstraintKind::safety;
    return std::nullopt;
  }
  if ((is_frame(m, "by") || is_frame(m, "from")) && m.args.size() == 2) return ConstraintKind::target;
  if (is_frame(m, "no") && arg(m, 0)) {
    const Term& what = *arg(m, 0);
    if (what.kind == TermKind::frame) return ConstraintKind::action;
    const Term* action = clause.action();
    if (what.name == "one" && action && target_term(*action)) return ConstraintKind::target;
    return ConstraintKind::object;
  }
  if (is_frame(m, "after") && arg(m, 1) && arg(m, 1)->kind == TermKind::frame) return ConstraintKind::sequential;
  return std::nullopt;
}

std::vector<std::optional<ConstraintKind>> classify(const parser::ChartNode& parse) {
  const Term& clause = parse.semantics.term();
  std::vector<std::optional<ConstraintKind>> out;
  if (const Term* a = clause.action(); a && constraint_frame(*a)) out.push_back(classify(*a, clause));
  for (const Term& m : clause.modifiers) out.push_back(classify(m, clause));
  return out;
}

namespace {

class Builder {
 public:
  Builder(const WorldSnapshot& world, const ResolverConfig& config) : world_(world), config_(config) {}

  const WorldObject& object(const std::string& id) const { return *world_.object(id); }

  GoalTarget grasp(const std::string& id, std::string site, const char* stage) const {
    const WorldObject& o = object(id);
    if (o.grasps.empty()) unresolved(o.id + " cannot be grasped");
    if (site.empty()) {
      // under-specified grasp: seeded choice over the sorted grasp names
      std::vector<std::string> names;
      for (const auto& [n, pose] : o.grasps) names.push_back(n);
      site = names[seeded_choice(names.size(), config_.seed, "grasp:" + o.id)];
    }
    const auto it = o.grasps.find(site);
    if (it == o.grasps.end()) unresolved(o.id + " has no " + site + " grasp");
    return GoalTarget{it->second, o.id, site, stage};
  }

  GoalTarget handover() const {
    const auto it = world_.locations.find("handover");
    if (it == world_.locations.end()) unresolved("no handover location");
    return GoalTarget{it->second, "", "handover", "handover"};
  }

  GoalTarget place(const std::string& id) const {
    const WorldObject& o = object(id);
    if (!o.place) unresolved(o.id + " has no place pose");
    return GoalTarget{*o.place, o.id, "place", "place"};
  }

  std::vector<GoalTarget> queue(const std::string& action, const std::string& object, const std::string& site,
                                const std::string& target) const {
    if (action == "graspObject" || action == "pickObject" || action == "moveObject") {
      return {grasp(object, site, "grasp")};
    }
    if (action == "passObject" || action == "handObject") return {grasp(object, site, "grasp"), handover()};
    if (action == "placeObject") return {grasp(object, site, "grasp"), place(target)};
    if (action == "putObject") return {grasp(object, site, "place")};
    if (action == "pushObject") return {grasp(object, site, "push")};
    throw ResolveError(ResolveFailure::no_content, "no motion for " + action);
  }

 private:
  const WorldSnapshot& world_;
  const ResolverConfig& config_;
};

bool same_goal(const GoalTarget& a, const GoalTarget& b) {
  return a.object_id == b.object_id && a.site == b.site && a.stage == b.stage &&
         a.pose.position == b.pose.position && a.pose.orientation == b.pose.orientation;
}

bool same_spec(const ConstraintSpec& a, const ConstraintSpec& b) { return a.kind == b.kind && a.source == b.source; }

InstructionEvent resolve_full(const Term& clause, const WorldSnapshot& world, const ResolverConfig& config) {
  const Term* action = clause.action();
  if (!clause.is_clause() || !action) throw ResolveError(ResolveFailure::no_content, "not an instruction");
  InstructionEvent ev;
  ev.source = grammar::serialize(clause);
  Builder build(world, config);

  std::vector<const Term*> modifiers;
  const bool task = !constraint_frame(*action);
  if (!task) modifiers.push_back(action);
  for (const Term& m : clause.modifiers) modifiers.push_back(&m);

  // Task state, possibly rewritten by corrections below.
  std::string verb = task ? action->name : "";
  const Term* object_term = task ? clause.object() : nullptr;
  std::string object_id;
  if (object_term && object_term->kind == TermKind::referent) {
    // a requested grasp site ("by the handle") narrows the candidates
    auto found = candidates_for(*object_term, world, config, nullptr);
    for (const Term* m : modifiers) {
      if (classify(*m, clause) != ConstraintKind::target || is_frame(*m, "no")) continue;
      std::vector<const WorldObject*> kept;
      for (const auto* o : found) {
        if (o->grasps.count(m->args[1].name)) kept.push_back(o);
      }
      if (!kept.empty()) found = std::move(kept);
    }
    object_id = pick(found, *object_term, config);
  }
  const Term* target = task ? target_term(*action) : nullptr;
  std::string target_id;
  if (target) target_id = ground_referent(*target, world, config);
  std::string site;
  std::vector<GoalTarget> before;  // sequential prerequisites
  double speed = 1.0;

  for (const Term* m : modifiers) {
    const auto kind = classify(*m, clause);
    const std::string source = grammar::serialize(*m);
    if (!kind) {
      ev.open.push_back(source);
      continue;
    }
    ConstraintSpec spec{*kind, SpeedScale{}, source};
    switch (*kind) {
      case ConstraintKind::manner: {
        const double f = m->args[1].name == "faster" ? config.faster : config.slower;
        speed *= f;
        spec.payload = SpeedScale{f};
        break;
      }
      case ConstraintKind::safety: {
        if (is_frame(*m, "avoid")) {
          const Term& go = m->args[1];
          const Term& where = go.args[1];
          const std::string& name = where.args[0].name;
          const KeepOut* found = nullptr;
          for (const auto& k : world.keepouts) {
            if (k.relation != where.name) continue;
            bool match = k.referent == name;
            for (const auto* o : world.objects_named(name)) match = match || k.referent == o->id;
            if (match) {
              found = &k;
              break;
            }
          }
          if (!found) unresolved("no keep-out " + where.name + " " + name);
          spec.payload = KeepOutRef{found->id};
        } else {
          spec.payload = OrientationLimit{AngleBox::symmetric(config.upright_bound)};
        }
        break;
      }
      case ConstraintKind::target: {
        if (is_frame(*m, "no")) {
          target_id = ground_referent(m->args[0], world, config, target);
          const GoalTarget g = build.place(target_id);
          spec.payload = GoalRef{g.object_id, g.site, g.pose};
        } else {
          if (object_id.empty()) unresolved("no object to grasp " + source);
          site = m->args[1].name;
          const GoalTarget g = build.grasp(object_id, site, "grasp");
          spec.payload = GoalRef{g.object_id, g.site, g.pose};
        }
        break;
      }
      case ConstraintKind::object: {
        object_id = ground_referent(m->args[0], world, config, object_term);
        const WorldObject& o = build.object(object_id);
        spec.payload = ReferentFilter{o.name, o.attributes, o.id};
        break;
      }
      case ConstraintKind::action: {
        const Term& frame = m->args[0];
        verb = frame.name;
        if (const Term* obj = frame.object(); obj && obj->kind == TermKind::referent) {
          object_id = ground_referent(*obj, world, config, object_term);
        } else if (frame.args.size() > 1 && frame.args[1].kind == TermKind::referent) {
          object_id = ground_referent(frame.args[1], world, config, object_term);
        }
        spec.payload = ActionSymbol{verb};
        break;
      }
      case ConstraintKind::sequential: {
        const Term& first = m->args[1];
        if (first.args.size() < 2) unresolved("incomplete prerequisite " + source);
        const std::string first_obj = ground_referent(first.args[1], world, config, object_term);
        const Term* first_target = target_term(first);
        const auto q = build.queue(first.name, first_obj, "",
                                   first_target ? ground_referent(*first_target, world, config) : "");
        before.insert(before.end(), q.begin(), q.end());
        spec.payload = Ordering{grammar::serialize(first), verb.empty() ? source : verb};
        break;
      }
    }
    ev.constraints.push_back(std::move(spec));
  }

  std::vector<GoalTarget> queue = before;
  if (!verb.empty()) {
    if (object_id.empty()) unresolved("no object for " + verb);
    const auto q = build.queue(verb, object_id, site, target_id);
    queue.insert(queue.end(), q.begin(), q.end());
  }
  if (!queue.empty()) {
    ev.goal = queue.front();
    ev.then_goals.assign(queue.begin() + 1, queue.end());
  }
  if (speed != 1.0) {
    CostParams p;
    p.speed_weight = speed;
    ev.cost_params = p;
  }
  if (!ev.has_content()) throw ResolveError(ResolveFailure::no_content, "nothing to do for " + ev.source);
  return ev;
}

}  // namespace

std::vector<GoalTarget> goal_queue(const InstructionEvent& event) {
  std::vector<GoalTarget> q;
  if (event.goal) q.push_back(*event.goal);
  q.insert(q.end(), event.then_goals.begin(), event.then_goals.end());
  return q;
}

Resolution resolve(const parser::ChartNode& parse, const WorldSnapshot& world, const ResolveContext& context,
                   const ResolverConfig& config) {
  if (!parser::submittable(parse)) throw ResolveError(ResolveFailure::no_content, "parse is not submittable");
  Resolution r;
  r.full = resolve_full(parse.semantics.term(), world, config);
  if (!context.prior) {
    r.event = r.full;
    return r;
  }
  const InstructionEvent& prior = *context.prior;
  InstructionEvent& ev = r.event;
  ev.source = r.full.source;
  ev.open = r.full.open;
  ev.supersedes = prior.id;

  const auto now = goal_queue(r.full);
  const auto before = goal_queue(prior);
  const bool changed = now.size() != before.size() ||
                       !std::equal(now.begin(), now.end(), before.begin(), same_goal);
  if (changed) {
    const int done = std::clamp(context.completed_stages, 0, static_cast<int>(before.size()));
    for (int i = 0; i < done; ++i) {
      if (i >= static_cast<int>(now.size()) || !same_goal(now[i], before[i])) {
        throw ResolveError(ResolveFailure::irreversible,
                           "correction changes the completed " + before[i].stage + " of " + before[i].object_id);
      }
    }
    if (done < static_cast<int>(now.size())) {
      ev.goal = now[done];
      ev.then_goals.assign(now.begin() + done + 1, now.end());
    }
  }
  for (const auto& c : r.full.constraints) {
    const bool seen = std::any_of(prior.constraints.begin(), prior.constraints.end(),
                                  [&](const ConstraintSpec& p) { return same_spec(c, p); });
    if (!seen) ev.constraints.push_back(c);
  }
  if (r.full.cost_params != prior.cost_params) ev.cost_params = r.full.cost_params.value_or(CostParams{});
  return r;
}

parser::ReferentCheck referent_check(const WorldSnapshot& world, const ResolverConfig& config) {
  return [&world, config](const parser::ChartNode& node) {
    try {
      resolve_full(node.semantics.term(), world, config);
      return true;
    } catch (const ResolveError& e) {
      return e.failure() != ResolveFailure::unresolved_referent;
    }
  };
}

std::string check_routing(const InstructionEvent& event) {
  for (const auto& c : event.constraints) {
    if (!c.consistent()) return "payload does not match kind for " + c.source;
    const std::string_view a = c.adaption();
    const bool ok = c.kind == ConstraintKind::manner   ? a == "phi"
                    : c.kind == ConstraintKind::safety ? a == "X_safe"
                                                       : a == "X_task";
    if (!ok) return "misrouted " + c.source;
  }
  return "";
}

}  // namespace steer::resolver
