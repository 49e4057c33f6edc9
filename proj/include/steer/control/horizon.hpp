#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "steer/math/qp.hpp"
#include "steer/planner/corridor.hpp"
#include "steer/resolver/event.hpp"

namespace steer::control {

using planner::AdmissibleSets;
using resolver::CostParams;
using world::Vec2;
using world::Vec3;

struct EEState {
  Vec3 p = Vec3::Zero();
  Vec2 e = Vec2::Zero();
  Vec3 v = Vec3::Zero();
  Vec2 e_rate = Vec2::Zero();

  bool finite() const;
};

struct ControlInput {
  Vec3 a = Vec3::Zero();
  Vec2 e_acc = Vec2::Zero();
};

// Exact double-integrator update under a constant input.
EEState advance(const EEState& x0, const ControlInput& u, double dt);

struct ControllerConfig {
  int horizon = 10;
  double dt = 0.1;
  double v_nominal = 0.1;      // m/s at speed_weight 1
  double max_speed_weight = 12.0;
  double arrive_decel = 0.5;   // m/s^2 used to shape the reference near the goal
  double w_path = 50.0;
  double w_velocity = 10.0;
  double w_orientation = 20.0;
  double w_orientation_rate = 1.0;
  double w_input = 0.01;
  double w_input_rate = 0.001;
  double w_terminal = 100.0;
  double w_slack = 1e4;        // quadratic slack weight
  double slack_l1 = 1e3;       // linear slack weight (exact penalty)
};

// Slack groups per predicted step.
enum SlackGroup { kRegionSlack = 0, kOrientationSlack = 1, kVelocitySlack = 2 };

struct HorizonSolution {
  std::vector<ControlInput> inputs;            // N
  std::vector<EEState> states;                 // N + 1, states[0] = x0
  std::vector<std::array<double, 3>> slack;    // N, per SlackGroup
  std::vector<int> regions;                    // N, corridor region per predicted step 1..N
  double cost = 0;
  bool degraded = false;
  math::QpStatus status = math::QpStatus::optimal;

  double max_slack() const;
};

// Where the step's predicted positions are assumed to be when choosing the
// active corridor region per step.
struct StepHints {
  int region = 0;              // region of x0 along the corridor
  std::vector<Vec3> guess;     // N predicted positions (previous solution)
  const HorizonSolution* previous = nullptr;  // fallback for the degraded mode
};

// Reference along the corridor: position, velocity, orientation per step.
struct Reference {
  std::vector<Vec3> p;   // N
  std::vector<Vec3> v;   // N
  Vec2 e = Vec2::Zero();
  std::vector<double> s; // arc length per step
};

Reference make_reference(const AdmissibleSets& sets, const CostParams& params, double progress,
                         const ControllerConfig& config);

// The condensed QP for one step. Decision vector z = [u_0..u_{N-1} (5 each),
// slack (3 per step)].
struct HorizonProblem {
  math::QpProblem qp;
  double constant = 0;
  Reference ref;
  std::vector<int> regions;
  EEState x0;
  ControlInput u0;
  CostParams params;
  ControllerConfig config;
  std::vector<world::AngleBox> orientation;  // per predicted step
};

HorizonProblem build_problem(const EEState& x0, const ControlInput& u0, const AdmissibleSets& sets,
                             const CostParams& params, double progress, const StepHints& hints,
                             const ControllerConfig& config = {});

// Cost evaluated by rolling the inputs out through advance(); independent of
// the condensed matrices.
double rollout_cost(const HorizonProblem& problem, const Eigen::VectorXd& z);
// Gradient from the condensed form (H z + g).
Eigen::VectorXd cost_gradient(const HorizonProblem& problem, const Eigen::VectorXd& z);

HorizonSolution step(const EEState& x0, const ControlInput& u0, const AdmissibleSets& sets, const CostParams& params,
                     double progress, const StepHints& hints = {}, const ControllerConfig& config = {});

// Absolute cost_params replace the current ones; without them the event's
// manner scales multiply speed_weight. speed_weight is capped at
// config.max_speed_weight.
CostParams apply_event(const CostParams& params, const resolver::InstructionEvent& event,
                       const ControllerConfig& config = {});

// Region, orientation and velocity constraint violations of a state
// against step-`region` constraints.
std::array<double, 3> violations(const EEState& x, const AdmissibleSets& sets, int region);

}  // namespace steer::control
