#include "controller_checks.hpp"

#include <random>

namespace steer::checks {

using control::advance;
using control::EEState;
using world::Pose;
using world::Vec2;
using world::Vec3;

namespace {

world::WorldSnapshot fixture(const std::string& name) {
  return world::load_world_file(STEER_DATA_DIR "/worlds/" + name + ".json");
}

Pose at(double x, double y, double z) {
  Pose p;
  p.position = Vec3(x, y, z);
  return p;
}

struct Corridor {
  const char* world;
  Pose start;
  Pose goal;
};

const Corridor kCorridors[] = {
    {"scenario1", at(0.467, -0.025, 0.441), at(0.398, 0.334, 0.298)},
    {"scenario2", at(0.4, 0.4, 0.32), at(0, -0.6, 0.8)},
    {"scenario3", at(0.4, 0.4, 0.30), at(0.313, -0.75, 0.47)},
};

AdmissibleSets corridor_sets(int i) {
  return planner::plan_initial(kCorridors[i].start, kCorridors[i].goal, fixture(kCorridors[i].world));
}

int region_of(const AdmissibleSets& sets, const Vec3& p) {
  for (int r = 0; r < static_cast<int>(sets.task.regions.size()); ++r) {
    if (sets.task.regions[r].contains(p)) return r;
  }
  return 0;
}

}  // namespace

bool rollout_feasible(const HorizonProblem& hp, const AdmissibleSets& sets, const std::vector<ControlInput>& u) {
  EEState x = hp.x0;
  for (int k = 0; k < hp.config.horizon; ++k) {
    if ((u[k].a.cwiseAbs().array() > sets.robot.a_max).any()) return false;
    if ((u[k].e_acc.cwiseAbs().array() > sets.robot.e_acc_max).any()) return false;
    x = advance(x, u[k], hp.config.dt);
    if (!sets.task.regions[hp.regions[k]].contains(x.p)) return false;
    if (!hp.orientation[k].contains(x.e)) return false;
    if (x.v.cwiseAbs().maxCoeff() > sets.robot.v_max / std::sqrt(3.0) + 1e-12) return false;
    if (x.e_rate.cwiseAbs().maxCoeff() > sets.robot.e_rate_max + 1e-12) return false;
  }
  return true;
}

bool oracle_feasible(const HorizonProblem& hp, const AdmissibleSets& sets) {
  const int n = hp.config.horizon;
  const double dt = hp.config.dt;
  for (int policy = 0; policy < 3; ++policy) {
    std::vector<ControlInput> u(n);
    EEState x = hp.x0;
    for (int k = 0; k < n; ++k) {
      Vec3 a = Vec3::Zero();
      Vec2 ea = Vec2::Zero();
      if (policy != 1) {
        a = -x.v / dt;
        ea = -x.e_rate / dt;
      }
      if (policy == 2) a += 0.2 * (sets.task.boxes[hp.regions[k]].center() - x.p);
      u[k].a = a.cwiseMax(-sets.robot.a_max).cwiseMin(sets.robot.a_max);
      u[k].e_acc = ea.cwiseMax(-sets.robot.e_acc_max).cwiseMin(sets.robot.e_acc_max);
      x = advance(x, u[k], dt);
    }
    if (rollout_feasible(hp, sets, u)) return true;
  }
  return false;
}

SlackSuite zero_slack_suite(int instances, unsigned seed) {
  const AdmissibleSets all[] = {corridor_sets(0), corridor_sets(1), corridor_sets(2)};
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0, 1);
  SlackSuite out;
  for (int trial = 0; out.checked < instances && trial < 20 * instances; ++trial) {
    const AdmissibleSets& sets = all[trial % 3];
    const double progress = unit(rng) * sets.task.length();
    EEState x;
    x.p = sets.task.point_at(progress);
    x.v = Vec3(unit(rng) - 0.5, unit(rng) - 0.5, unit(rng) - 0.5) * 0.3;
    x.e = Vec2(unit(rng) - 0.5, unit(rng) - 0.5);
    x.e_rate = Vec2(unit(rng) - 0.5, unit(rng) - 0.5);
    control::StepHints hints;
    hints.region = region_of(sets, x.p);
    const auto hp = control::build_problem(x, ControlInput{}, sets, control::CostParams{}, progress, hints);
    if (!oracle_feasible(hp, sets)) continue;
    ++out.checked;
    const auto sol = control::step(x, ControlInput{}, sets, control::CostParams{}, progress, hints);
    if (sol.status != math::QpStatus::optimal || sol.max_slack() >= 1e-9) ++out.nonzero_slack;
  }
  return out;
}

double gradient_error(int trials, unsigned seed) {
  const auto sets = corridor_sets(1);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < trials; ++trial) {
    EEState x;
    x.p = sets.task.point_at(0.1 * trial * sets.task.length() / trials);
    x.v = Vec3(d(rng), d(rng), d(rng)) * 0.2;
    x.e = Vec2(d(rng), d(rng)) * 0.3;
    ControlInput u0;
    u0.a = Vec3(d(rng), d(rng), d(rng));
    u0.e_acc = Vec2(d(rng), d(rng));
    control::CostParams params;
    params.speed_weight = 1 + 3 * std::abs(d(rng));
    const auto hp = control::build_problem(x, u0, sets, params, 0.0, {});
    Eigen::VectorXd z(hp.qp.variables());
    for (int i = 0; i < z.size(); ++i) z(i) = d(rng);
    const Eigen::VectorXd g = control::cost_gradient(hp, z);
    Eigen::VectorXd fd(z.size());
    const double h = 1e-4;
    for (int i = 0; i < z.size(); ++i) {
      Eigen::VectorXd zp = z, zm = z;
      zp(i) += h;
      zm(i) -= h;
      fd(i) = (control::rollout_cost(hp, zp) - control::rollout_cost(hp, zm)) / (2 * h);
    }
    worst = std::max(worst, (fd - g).norm() / g.norm());
  }
  return worst;
}

double replay_error(int trials, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  double worst = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const auto sets = corridor_sets(trial % 3);
    EEState x;
    x.p = sets.task.point_at(0.5 * (d(rng) + 1) * sets.task.length());
    x.v = Vec3(d(rng), d(rng), d(rng)) * 0.05;
    const auto sol = control::step(x, ControlInput{}, sets, control::CostParams{}, 0.0);
    EEState r = x;
    for (std::size_t k = 0; k < sol.inputs.size(); ++k) {
      r = advance(r, sol.inputs[k], 0.1);
      worst = std::max({worst, (r.p - sol.states[k + 1].p).norm(), (r.v - sol.states[k + 1].v).norm(),
                        (r.e - sol.states[k + 1].e).norm()});
    }
  }
  return worst;
}

}  // namespace steer::checks
