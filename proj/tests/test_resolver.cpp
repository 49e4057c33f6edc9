#include <doctest.h>

#include <fstream>
#include <sstream>

#include "steer/resolver/resolver.hpp"

using namespace steer::resolver;
using steer::grammar::Dictionary;
using steer::parser::Chart;
using steer::parser::ChartNode;
using steer::parser::ParseResult;

namespace {

const Dictionary& dict() {
  static const Dictionary d = steer::grammar::load_grammar_file(STEER_DATA_DIR "/grammar/english.grammar");
  return d;
}

const WorldSnapshot& fixture(const std::string& name) {
  static std::map<std::string, WorldSnapshot> cache;
  auto it = cache.find(name);
  if (it == cache.end()) {
    it = cache.emplace(name, steer::world::load_world_file(STEER_DATA_DIR "/worlds/" + name + ".json")).first;
  }
  return it->second;
}

ParseResult parse(const std::string& sentence) {
  Chart chart;
  ParseResult r;
  std::istringstream in(sentence);
  for (std::string w; in >> w;) r = chart.feed_word(w, dict());
  return r;
}

std::optional<ChartNode> best(const std::string& sentence, const WorldSnapshot& world) {
  return steer::parser::best_parse(parse(sentence), referent_check(world));
}

std::vector<std::string> corpus() {
  std::ifstream in(STEER_DATA_DIR "/corpus/sentences.txt");
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] != '#') out.push_back(line);
  }
  return out;
}

Term ref(const std::string& name, std::vector<Term> mods = {}) {
  Term t = Term::referent(name);
  t.modifiers = std::move(mods);
  return t;
}

}  // namespace

TEST_CASE("ground_referent") {
  CHECK(ground_referent(ref("mug"), fixture("scenario1")) == "mug1");
  CHECK_THROWS_AS(ground_referent(ref("laptop"), fixture("scenario1")), ResolveError);

  const auto& two = fixture("two_mugs");
  const std::string a = ground_referent(ref("mug"), two);
  for (int i = 0; i < 10; ++i) CHECK(ground_referent(ref("mug"), two) == a);
  std::set<std::string> seen;
  for (std::uint64_t seed = 0; seed < 16; ++seed) {
    ResolverConfig c;
    c.seed = seed;
    seen.insert(ground_referent(ref("mug"), two, c));
  }
  CHECK(seen.size() == 2);

  const auto& kitchen = fixture("kitchen");
  CHECK(ground_referent(ref("mug", {ref("blue")}), kitchen) == "mug_blue");
  CHECK(ground_referent(ref("box", {Term::frame("on", {ref("right")})}), kitchen) == "box_right");
  CHECK_THROWS_AS(ground_referent(ref("mug", {ref("green")}), kitchen), ResolveError);
  const Term apple = ref("apple");
  CHECK(ground_referent(ref("it"), kitchen, {}, &apple) == "apple1");
  CHECK_THROWS_AS(ground_referent(ref("it"), kitchen), ResolveError);
}

TEST_CASE("classify follows the taxonomy examples") {
  auto kinds = [](const std::string& s) {
    const auto r = parse(s);
    REQUIRE(r.best);
    return classify(*r.best);
  };
  CHECK(kinds("keep it upright") == std::vector<std::optional<ConstraintKind>>{ConstraintKind::safety});
  CHECK(kinds("move the cup and keep it upright").back() == ConstraintKind::safety);
  CHECK(kinds("pass the screwdriver but go faster").back() == ConstraintKind::manner);
  CHECK(kinds("put the apple in the box no the one on the right").back() == ConstraintKind::target);
  CHECK(kinds("grab the mug no the blue one").back() == ConstraintKind::object);
  CHECK(kinds("grab the apple no push it").back() == ConstraintKind::action);
  CHECK(kinds("pick up the apple after you put down the mug").back() == ConstraintKind::sequential);
  CHECK(kinds("grab the mug by the top").back() == ConstraintKind::target);
}

TEST_CASE("taxonomy totality over the corpus") {
  for (const auto& s : corpus()) {
    CAPTURE(s);
    const auto r = parse(s);
    REQUIRE(r.best);
    for (const auto& node : r.alternatives) {
      if (!steer::parser::submittable(node)) continue;
      for (const auto& k : classify(node)) CHECK(k.has_value());
    }
  }
}

TEST_CASE("every emitted event routes constraints by kind") {
  int resolved = 0;
  for (const char* w : {"scenario1", "scenario2", "scenario3", "kitchen", "two_mugs"}) {
    for (const auto& s : corpus()) {
      const auto node = best(s, fixture(w));
      if (!node) continue;
      try {
        const auto r = resolve(*node, fixture(w));
        CHECK(check_routing(r.event) == "");
        CHECK(r.event.has_content());
        CHECK(r.event.open.empty());
        ++resolved;
      } catch (const ResolveError&) {
      }
    }
  }
  CHECK(resolved > 40);
}

TEST_CASE("scenario 1: side grasp, then a top-grasp correction") {
  const auto& w = fixture("scenario1");
  auto first = resolve(*best("grab the mug", w), w);
  REQUIRE(first.event.goal);
  CHECK(first.event.goal->site == "side");
  CHECK(first.event.goal->object_id == "mug1");
  CHECK(first.event.constraints.empty());
  first.full.id = 1;

  const auto node = best("grab the mug from the top", w);
  REQUIRE(node);
  CHECK(node->semantics.str() == "INSTRUCT(speaker,listener,graspObject(listener,mug), from(mug, top))");
  const auto second = resolve(*node, w, {&first.full, 0});
  REQUIRE(second.event.goal);
  CHECK(second.event.goal->site == "top");
  CHECK(second.event.goal->pose.position.isApprox(w.object("mug1")->grasps.at("top").position));
  CHECK(second.event.supersedes == std::optional<std::uint64_t>(1));
  REQUIRE(second.event.constraints.size() == 1);
  CHECK(second.event.constraints[0].kind == ConstraintKind::target);

  // once the side grasp is done the correction cannot be honoured
  try {
    resolve(*node, w, {&first.full, 1});
    FAIL("expected an irreversible error");
  } catch (const ResolveError& e) {
    CHECK(e.failure() == ResolveFailure::irreversible);
  }
}

TEST_CASE("corrections carry only the delta") {
  const auto& w3 = fixture("scenario3");
  auto base = resolve(*best("hand me the screwdriver", w3), w3);
  base.full.id = 4;
  const auto queue = goal_queue(base.full);
  REQUIRE(queue.size() == 2);
  CHECK(queue[0].stage == "grasp");
  CHECK(queue[1].stage == "handover");

  const auto faster = resolve(*best("hand me the screwdriver but move faster", w3), w3, {&base.full, 1});
  CHECK_FALSE(faster.event.goal);
  REQUIRE(faster.event.cost_params);
  CHECK(faster.event.cost_params->speed_weight == 2.0);
  REQUIRE(faster.event.constraints.size() == 1);
  CHECK(faster.event.constraints[0].kind == ConstraintKind::manner);

  const auto& w2 = fixture("scenario2");
  auto upright = resolve(*best("pass the mug but keep it upright", w2), w2);
  upright.full.id = 2;
  const auto avoid =
      resolve(*best("pass the mug but keep it upright and avoid going over the laptop", w2), w2, {&upright.full, 1});
  CHECK_FALSE(avoid.event.goal);
  REQUIRE(avoid.event.constraints.size() == 1);
  CHECK(std::get<KeepOutRef>(avoid.event.constraints[0].payload).keepout_id == "over_laptop");
}

TEST_CASE("best_parse uses the world to drop unresolvable readings") {
  const auto& w = fixture("scenario2");
  const auto node = best("grab the mug by the laptop", w);
  REQUIRE(node);
  CHECK(node->semantics.str() == "INSTRUCT(speaker,listener,graspObject(listener,mug[by(mug, laptop)]))");
  CHECK_FALSE(best("grab the blue mug", fixture("scenario1")));
  const auto handle = best("grab the mug by the handle", fixture("kitchen"));
  REQUIRE(handle);
  CHECK(resolve(*handle, fixture("kitchen")).event.goal->object_id == "mug_black");
}

TEST_CASE("taxonomy corrections change the goal queue") {
  const auto& k = fixture("kitchen");
  const auto target = resolve(*best("put the apple in the box no the one on the right", k), k);
  CHECK(goal_queue(target.event).back().object_id == "box_right");
  const auto object = resolve(*best("grab the mug no the blue one", k), k);
  CHECK(object.event.goal->object_id == "mug_blue");
  const auto action = resolve(*best("grab the apple no push it", k), k);
  CHECK(action.event.goal->stage == "push");
  CHECK(action.event.goal->object_id == "apple1");
  const auto seq = resolve(*best("pick up the apple after you put down the mug", k), k);
  const auto q = goal_queue(seq.event);
  REQUIRE(q.size() == 2);
  CHECK(q[0].stage == "place");
  CHECK(q[1].object_id == "apple1");
}

TEST_CASE("supersession chains are ordered") {
  const auto& w = fixture("scenario2");
  const char* steps[] = {"pass the mug", "pass the mug but keep it upright",
                         "pass the mug but keep it upright and avoid going over the laptop"};
  std::vector<InstructionEvent> chain;
  std::optional<InstructionEvent> prior;
  for (int i = 0; i < 3; ++i) {
    auto r = resolve(*best(steps[i], w), w, {prior ? &*prior : nullptr, 0});
    r.event.id = r.full.id = static_cast<std::uint64_t>(i + 1);
    r.event.timestamp = i;
    chain.push_back(r.event);
    prior = r.full;
  }
  for (std::size_t i = 1; i < chain.size(); ++i) {
    REQUIRE(chain[i].supersedes);
    CHECK(*chain[i].supersedes == chain[i - 1].id);
    CHECK(*chain[i].supersedes < chain[i].id);
    CHECK(chain[i].timestamp > chain[i - 1].timestamp);
  }
}
