#include <doctest.h>

#include <chrono>
#include <random>

#include "controller_checks.hpp"
#include "steer/control/horizon.hpp"

using namespace steer::control;
using steer::planner::AdmissibleSets;
using steer::planner::plan_initial;
using steer::planner::SafeSet;
using steer::resolver::ConstraintKind;
using steer::resolver::ConstraintSpec;
using steer::resolver::InstructionEvent;
using steer::resolver::SpeedScale;
using steer::world::AngleBox;
using steer::world::Pose;
using steer::checks::oracle_feasible;

namespace {

steer::world::WorldSnapshot fixture(const std::string& name) {
  return steer::world::load_world_file(STEER_DATA_DIR "/worlds/" + name + ".json");
}

Pose at(double x, double y, double z) {
  Pose p;
  p.position = Vec3(x, y, z);
  return p;
}

ControlInput input(Vec3 a, Vec2 e = Vec2::Zero()) {
  ControlInput u;
  u.a = a;
  u.e_acc = e;
  return u;
}

}  // namespace

TEST_CASE("advance is the exact double integrator") {
  EEState x;
  CHECK((advance(x, ControlInput{}, 0.1).p - x.p).norm() == 0);
  const EEState y = advance(x, input(Vec3(1, 0, 0)), 0.1);
  CHECK(y.p.x() == doctest::Approx(0.005).epsilon(1e-12));
  CHECK(y.v.x() == doctest::Approx(0.1).epsilon(1e-12));

  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int trial = 0; trial < 50; ++trial) {
    EEState x0;
    x0.p = Vec3(d(rng), d(rng), d(rng));
    x0.v = Vec3(d(rng), d(rng), d(rng));
    x0.e = Vec2(d(rng), d(rng));
    x0.e_rate = Vec2(d(rng), d(rng));
    const ControlInput u = input(Vec3(d(rng), d(rng), d(rng)) * 5, Vec2(d(rng), d(rng)) * 10);
    EEState fine = x0;
    for (int i = 0; i < 10; ++i) fine = advance(fine, u, 0.01);
    const EEState coarse = advance(x0, u, 0.1);
    CHECK((fine.p - coarse.p).norm() < 1e-14);
    CHECK((fine.v - coarse.v).norm() < 1e-14);
    CHECK((fine.e - coarse.e).norm() < 1e-14);
  }
}

TEST_CASE("stationary optimum at the goal") {
  const auto w = fixture("empty");
  const Pose g = at(0.2, 0.1, 0.5);
  const auto sets = plan_initial(g, g, w);
  EEState x;
  x.p = g.position;
  const auto sol = step(x, ControlInput{}, sets, CostParams{}, 0.0);
  REQUIRE(sol.status == steer::math::QpStatus::optimal);
  for (const auto& u : sol.inputs) {
    CHECK(u.a.norm() < 1e-6);
    CHECK(u.e_acc.norm() < 1e-6);
  }
  CHECK(sol.max_slack() == 0);
}

TEST_CASE("predicted states replay through advance") {
  const auto w = fixture("scenario2");
  const auto sets = plan_initial(at(0.4, 0.4, 0.32), at(0, -0.6, 0.8), w);
  EEState x;
  x.p = Vec3(0.4, 0.4, 0.32);
  x.v = Vec3(-0.05, -0.05, 0.02);
  const auto sol = step(x, ControlInput{}, sets, CostParams{}, 0.0);
  REQUIRE(sol.states.size() == sol.inputs.size() + 1);
  EEState r = x;
  for (std::size_t k = 0; k < sol.inputs.size(); ++k) {
    r = advance(r, sol.inputs[k], 0.1);
    CHECK((r.p - sol.states[k + 1].p).norm() == 0);
    CHECK((r.e - sol.states[k + 1].e).norm() == 0);
  }
  for (const auto& u : sol.inputs) {
    CHECK(u.a.cwiseAbs().maxCoeff() <= sets.robot.a_max + 1e-9);
    CHECK(u.e_acc.cwiseAbs().maxCoeff() <= sets.robot.e_acc_max + 1e-9);
  }
}

TEST_CASE("zero slack whenever the unslacked problem is feasible") {
  const char* worlds[] = {"scenario1", "scenario2", "scenario3"};
  const Pose starts[] = {at(0.467, -0.025, 0.441), at(0.4, 0.4, 0.32), at(0.4, 0.4, 0.30)};
  const Pose goals[] = {at(0.398, 0.334, 0.298), at(0, -0.6, 0.8), at(0.313, -0.75, 0.47)};
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> unit(0, 1);
  int checked = 0;
  for (int trial = 0; checked < 100 && trial < 1000; ++trial) {
    const int s = trial % 3;
    const auto w = fixture(worlds[s]);
    const auto sets = plan_initial(starts[s], goals[s], w);
    const double len = sets.task.length();
    const double progress = unit(rng) * len;
    EEState x;
    x.p = sets.task.point_at(progress);
    x.v = Vec3(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5) * 0.3;
    x.e = Vec2(unit(rng) - 0.5, unit(rng) - 0.5);
    x.e_rate = Vec2(unit(rng) - 0.5, unit(rng) - 0.5);
    StepHints hints;
    for (int r = 0; r < static_cast<int>(sets.task.regions.size()); ++r) {
      if (sets.task.regions[r].contains(x.p)) {
        hints.region = r;
        break;
      }
    }
    const auto hp = build_problem(x, ControlInput{}, sets, CostParams{}, progress, hints);
    if (!oracle_feasible(hp, sets)) continue;
    ++checked;
    const auto sol = step(x, ControlInput{}, sets, CostParams{}, progress, hints);
    CHECK(sol.status == steer::math::QpStatus::optimal);
    CHECK(sol.max_slack() < 1e-9);
  }
  CHECK(checked == 100);
}

TEST_CASE("slack absorbs a newly tightened orientation box and decays") {
  const auto w = fixture("scenario2");
  SafeSet safe;
  safe.orientation = AngleBox::symmetric(0.15);
  const auto sets = plan_initial(at(0.4, 0.4, 0.32), at(0, -0.6, 0.8), w, safe);
  EEState x;
  x.p = Vec3(0.4, 0.4, 0.32);
  x.e = Vec2(0.45, -0.3);
  x.e_rate = Vec2(0.3, -0.2);
  const auto sol = step(x, ControlInput{}, sets, CostParams{}, 0.0);
  REQUIRE(sol.status == steer::math::QpStatus::optimal);
  CHECK(sol.slack[0][kOrientationSlack] > 0);
  for (std::size_t k = 1; k < sol.slack.size(); ++k) {
    CHECK(sol.slack[k][kOrientationSlack] <= sol.slack[k - 1][kOrientationSlack] + 1e-9);
  }
  CHECK(sol.slack.back()[kOrientationSlack] < sol.slack.front()[kOrientationSlack]);
}

TEST_CASE("condensed gradient matches finite differences of the rollout cost") {
  const auto w = fixture("scenario2");
  const auto sets = plan_initial(at(0.4, 0.4, 0.32), at(0, -0.6, 0.8), w);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    EEState x;
    x.p = sets.task.point_at(0.1 * trial * sets.task.length() / 20);
    x.v = Vec3(d(rng), d(rng), d(rng)) * 0.2;
    x.e = Vec2(d(rng), d(rng)) * 0.3;
    const ControlInput u0 = input(Vec3(d(rng), d(rng), d(rng)), Vec2(d(rng), d(rng)));
    CostParams params;
    params.speed_weight = 1 + 3 * std::abs(d(rng));
    const auto hp = build_problem(x, u0, sets, params, 0.0, {});
    Eigen::VectorXd z(hp.qp.variables());
    for (int i = 0; i < z.size(); ++i) z(i) = d(rng);
    // Cost consistency between the condensed form and the rollout.
    const double quad = 0.5 * z.dot(hp.qp.H * z) + hp.qp.g.dot(z) + hp.constant;
    CHECK(std::abs(quad - rollout_cost(hp, z)) <= 1e-9 * std::max(1.0, std::abs(quad)));
    const Eigen::VectorXd g = cost_gradient(hp, z);
    Eigen::VectorXd fd(z.size());
    const double h = 1e-4;
    for (int i = 0; i < z.size(); ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      fd(i) = (rollout_cost(hp, zp) - rollout_cost(hp, zm)) / (2 * h);
    }
    CHECK((fd - g).norm() / g.norm() < 1e-6);
  }
}

TEST_CASE("step meets the 10 Hz budget on the scenario corridors") {
  const char* worlds[] = {"scenario1", "scenario2", "scenario3"};
  const Pose starts[] = {at(0.467, -0.025, 0.441), at(0.4, 0.4, 0.32), at(0.4, 0.4, 0.30)};
  const Pose goals[] = {at(0.40, 0.45, 0.32), at(0, -0.6, 0.8), at(0.313, -0.75, 0.47)};
  double worst = 0;
  for (int s = 0; s < 3; ++s) {
    const auto w = fixture(worlds[s]);
    const auto sets = plan_initial(starts[s], goals[s], w);
    EEState x;
    x.p = starts[s].position;
    for (int i = 0; i < 5; ++i) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto sol = step(x, ControlInput{}, sets, CostParams{}, 0.0);
      worst = std::max(worst, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
      x = sol.states[1];
    }
  }
  CHECK(worst < 0.1);
}

TEST_CASE("degraded mode shifts the previous solution") {
  const auto w = fixture("empty");
  const auto sets = plan_initial(at(0, 0, 0.5), at(0.5, 0, 0.5), w);
  EEState x;
  x.p = Vec3(0, 0, 0.5);
  const auto first = step(x, ControlInput{}, sets, CostParams{}, 0.0);
  StepHints hints;
  hints.previous = &first;
  ControllerConfig tiny;
  // a NaN weight makes the QP unsolvable
  tiny.w_path = std::numeric_limits<double>::quiet_NaN();
  const auto sol = step(first.states[1], first.inputs[0], sets, CostParams{}, 0.0, hints, tiny);
  CHECK(sol.degraded);
  REQUIRE(sol.inputs.size() == first.inputs.size());
  for (std::size_t k = 0; k + 1 < sol.inputs.size(); ++k) CHECK((sol.inputs[k].a - first.inputs[k + 1].a).norm() == 0);
  CHECK(sol.inputs.back().a.norm() == 0);
}

TEST_CASE("apply_event scales speed and caps it") {
  InstructionEvent faster;
  faster.constraints.push_back(ConstraintSpec{ConstraintKind::manner, SpeedScale{2.0}, "faster"});
  CostParams p;
  p = apply_event(p, faster);
  CHECK(p.speed_weight == 2.0);
  CHECK(p.path_weight == 1.0);
  CHECK(p.terminal_weight == 1.0);
  p = apply_event(p, faster);
  CHECK(p.speed_weight == 4.0);
  CHECK(apply_event(p, InstructionEvent{}) == p);
  for (int i = 0; i < 5; ++i) p = apply_event(p, faster);
  CHECK(p.speed_weight == ControllerConfig{}.max_speed_weight);
}

TEST_CASE("closed loop at the speed cap respects the velocity limit") {
  const auto w = fixture("scenario3");
  const auto sets = plan_initial(at(0.4, 0.4, 0.30), at(0.313, -0.75, 0.47), w);
  CostParams params;
  params.speed_weight = ControllerConfig{}.max_speed_weight;
  EEState x;
  x.p = Vec3(0.4, 0.4, 0.30);
  ControlInput u0;
  double progress = 0;
  HorizonSolution prev;
  int region = 0;
  for (int t = 0; t < 100; ++t) {
    StepHints hints;
    hints.region = region;
    if (!prev.states.empty()) {
      for (std::size_t k = 2; k < prev.states.size(); ++k) hints.guess.push_back(prev.states[k].p);
      hints.guess.push_back(prev.states.back().p);
      hints.previous = &prev;
    }
    const auto sol = step(x, u0, sets, params, progress, hints);
    x = sol.states[1];
    u0 = sol.inputs[0];
    region = sol.regions[0];
    prev = sol;
    progress = std::max(progress, sets.task.progress_of(x.p));
    CHECK(x.v.norm() <= sets.robot.v_max + 1e-6);
    bool inside = false;
    for (const auto& r : sets.task.regions) inside = inside || r.violation(x.p) <= std::max(sol.slack[0][kRegionSlack], 1e-6);
    CHECK(inside);
  }
  CHECK((x.p - Vec3(0.313, -0.75, 0.47)).norm() < 2e-3);
}

TEST_CASE("shared controller checks") {
  const auto slack = steer::checks::zero_slack_suite(30, 23);
  CHECK(slack.checked == 30);
  CHECK(slack.nonzero_slack == 0);
  CHECK(steer::checks::gradient_error(5, 9) < 1e-6);
  CHECK(steer::checks::replay_error(6, 4) == 0);
}
