#pragma once

#include <string>

#include "steer/control/horizon.hpp"

namespace steer::checks {

using control::ControlInput;
using control::HorizonProblem;
using planner::AdmissibleSets;

// True when the whole rollout meets the unslacked constraints of `hp`.
bool rollout_feasible(const HorizonProblem& hp, const AdmissibleSets& sets, const std::vector<ControlInput>& u);

// Brute-force feasibility oracle over a few candidate policies: brake hard,
// coast, and brake towards the region centre.
bool oracle_feasible(const HorizonProblem& hp, const AdmissibleSets& sets);

// Random start states along the scenario corridors.
struct SlackSuite {
  int checked = 0;        // instances the oracle found feasible
  int nonzero_slack = 0;  // of those, solutions with slack > 1e-9 or not optimal
};
SlackSuite zero_slack_suite(int instances, unsigned seed);

// Largest relative error between the analytic cost gradient and central
// differences of the rollout cost.
double gradient_error(int trials, unsigned seed);

// Largest deviation between predicted states and replaying the predicted
// inputs through advance().
double replay_error(int trials, unsigned seed);

}  // namespace steer::checks
