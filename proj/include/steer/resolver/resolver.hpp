#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "steer/parser/chart.hpp"
#include "steer/resolver/event.hpp"

namespace steer::resolver {

using grammar::Term;
using world::WorldSnapshot;

struct ResolverConfig {
  std::uint64_t seed = 7;
  double upright_bound = 0.15;  // rad, "keep it upright" / "don't spill it"
  double faster = 2.0;
  double slower = 0.5;
};

enum class ResolveFailure { unresolved_referent, irreversible, no_content };

class ResolveError : public std::runtime_error {
 public:
  ResolveError(ResolveFailure failure, const std::string& what) : std::runtime_error(what), failure_(failure) {}
  ResolveFailure failure() const { return failure_; }

 private:
  ResolveFailure failure_;
};

// Deterministic pick among sorted candidates, salted by `salt` so different
// referents do not share one draw.
std::size_t seeded_choice(std::size_t n, std::uint64_t seed, const std::string& salt);

// Object id for a referent term (name plus object-site modifiers). "it" and
// "one" need `anaphor`, the clause's object term. Throws ResolveError.
std::string ground_referent(const Term& referent, const WorldSnapshot& world, const ResolverConfig& config = {},
                            const Term* anaphor = nullptr);

// Taxonomy kind of one modifier clause, given the clause it modifies.
// Empty when the modifier is not one of the six kinds.
std::optional<ConstraintKind> classify(const Term& modifier, const Term& clause);
// Kind per modifier of a submittable parse (the clause's own action counts
// when it is itself a constraint, e.g. "keep it upright").
std::vector<std::optional<ConstraintKind>> classify(const parser::ChartNode& parse);

struct Resolution {
  InstructionEvent full;   // everything the parse asks for
  InstructionEvent event;  // delta against the prior resolution
};

// Progress of the prior event's goal queue: stages already completed cannot
// be changed any more.
struct ResolveContext {
  const InstructionEvent* prior = nullptr;  // prior full resolution
  int completed_stages = 0;
};

// Parse -> goal queue, constraints and cost updates. When a prior is given
// the returned event carries only the delta and supersedes the prior.
// Throws ResolveError.
Resolution resolve(const parser::ChartNode& parse, const WorldSnapshot& world, const ResolveContext& context = {},
                   const ResolverConfig& config = {});

// Context check for best_parse: every referent of the parse grounds.
parser::ReferentCheck referent_check(const WorldSnapshot& world, const ResolverConfig& config = {});

// Empty when safety specs only touch X_safe, manner only phi, and the rest
// only X_task; otherwise a description of the offending spec.
std::string check_routing(const InstructionEvent& event);

// Goal queue of an event: goal followed by then_goals.
std::vector<GoalTarget> goal_queue(const InstructionEvent& event);

}  // namespace steer::resolver
