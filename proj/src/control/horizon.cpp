#include "steer/control/horizon.hpp"

#include <algorithm>
#include <cmath>

namespace steer::control {

namespace {

constexpr int kNu = 5;  // a(3), e_acc(2)
constexpr int kNs = 3;  // slack groups

int u_index(int step, int c) { return kNu * step + c; }
int s_index(int n, int step, int group) { return kNu * n + kNs * step + group; }

// Accumulates w * ||A z + b||^2 into the 0.5 z'Hz + g'z + c form.
struct CostBuilder {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double c = 0;

  explicit CostBuilder(int nz) : H(Eigen::MatrixXd::Zero(nz, nz)), g(Eigen::VectorXd::Zero(nz)) {}

  void add(const Eigen::RowVectorXd& a, double b, double w) {
    H.noalias() += 2 * w * a.transpose() * a;
    g.noalias() += 2 * w * b * a.transpose();
    c += w * b * b;
  }
};

// Rows mapping z to the step-k state components (k = 1..N).
struct Prediction {
  std::vector<Eigen::MatrixXd> p, v, e, er;  // per step: rows x nz
  std::vector<Eigen::VectorXd> p0, v0, e0, er0;
};

Prediction predict(const EEState& x0, int n, double dt) {
  const int nz = (kNu + kNs) * n;
  Prediction out;
  for (int k = 1; k <= n; ++k) {
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(3, nz), V = Eigen::MatrixXd::Zero(3, nz);
    Eigen::MatrixXd E = Eigen::MatrixXd::Zero(2, nz), ER = Eigen::MatrixXd::Zero(2, nz);
    for (int j = 0; j < k; ++j) {
      const double cp = dt * dt * (k - j - 0.5);
      for (int i = 0; i < 3; ++i) {
        P(i, u_index(j, i)) = cp;
        V(i, u_index(j, i)) = dt;
      }
      for (int m = 0; m < 2; ++m) {
        E(m, u_index(j, 3 + m)) = cp;
        ER(m, u_index(j, 3 + m)) = dt;
      }
    }
    out.p.push_back(P);
    out.v.push_back(V);
    out.e.push_back(E);
    out.er.push_back(ER);
    out.p0.push_back(x0.p + k * dt * x0.v);
    out.v0.push_back(x0.v);
    out.e0.push_back(x0.e + k * dt * x0.e_rate);
    out.er0.push_back(x0.e_rate);
  }
  return out;
}

Vec3 tangent_at(const planner::Corridor& c, double s) {
  const auto& via = c.via_points;
  for (std::size_t i = 1; i < via.size(); ++i) {
    const Vec3 d = via[i] - via[i - 1];
    const double len = d.norm();
    if (len <= 0) continue;
    if (s <= len || i + 1 == via.size()) return d / len;
    s -= len;
  }
  return Vec3::Zero();
}

std::vector<ControlInput> inputs_of(const Eigen::VectorXd& z, int n) {
  std::vector<ControlInput> u(n);
  for (int k = 0; k < n; ++k) {
    u[k].a = Vec3(z(u_index(k, 0)), z(u_index(k, 1)), z(u_index(k, 2)));
    u[k].e_acc = Vec2(z(u_index(k, 3)), z(u_index(k, 4)));
  }
  return u;
}

double speed_weight(const CostParams& params, const ControllerConfig& config) {
  return std::clamp(params.speed_weight, 1.0 / config.max_speed_weight, config.max_speed_weight);
}

}  // namespace

bool EEState::finite() const { return p.allFinite() && e.allFinite() && v.allFinite() && e_rate.allFinite(); }

EEState advance(const EEState& x0, const ControlInput& u, double dt) {
  EEState x;
  x.p = x0.p + x0.v * dt + 0.5 * u.a * dt * dt;
  x.v = x0.v + u.a * dt;
  x.e = x0.e + x0.e_rate * dt + 0.5 * u.e_acc * dt * dt;
  x.e_rate = x0.e_rate + u.e_acc * dt;
  return x;
}

double HorizonSolution::max_slack() const {
  double m = 0;
  for (const auto& s : slack) m = std::max({m, s[0], s[1], s[2]});
  return m;
}

Reference make_reference(const AdmissibleSets& sets, const CostParams& params, double progress,
                         const ControllerConfig& config) {
  const auto& c = sets.task;
  const double length = c.length();
  const double v_ref = config.v_nominal * speed_weight(params, config);
  auto speed = [&](double s) { return std::min(v_ref, std::sqrt(2 * config.arrive_decel * std::max(0.0, length - s))); };
  Reference r;
  double s = std::clamp(progress, 0.0, length);
  for (int k = 1; k <= config.horizon; ++k) {
    s = std::min(length, s + speed(s) * config.dt);
    r.s.push_back(s);
    r.p.push_back(c.point_at(s));
    r.v.push_back(tangent_at(c, s) * speed(s));
  }
  const world::AngleBox& last = c.orientation_bounds.empty() ? world::AngleBox{} : c.orientation_bounds.back();
  r.e = last.clamp(sets.goal.orientation);
  return r;
}

HorizonProblem build_problem(const EEState& x0, const ControlInput& u0, const AdmissibleSets& sets,
                             const CostParams& params, double progress, const StepHints& hints,
                             const ControllerConfig& config) {
  const int n = config.horizon;
  const int nz = (kNu + kNs) * n;
  HorizonProblem hp;
  hp.x0 = x0;
  hp.u0 = u0;
  hp.params = params;
  hp.config = config;
  hp.ref = make_reference(sets, params, progress, config);

  // Active region per step: advance only when the guessed position is in the
  // next region already.
  const auto& regions = sets.task.regions;
  const int nr = static_cast<int>(regions.size());
  int idx = std::clamp(hints.region, 0, std::max(0, nr - 1));
  for (int k = 0; k < n; ++k) {
    const Vec3 q = k < static_cast<int>(hints.guess.size()) ? hints.guess[k] : x0.p;
    while (idx + 1 < nr && regions[idx + 1].contains(q)) ++idx;
    hp.regions.push_back(idx);
    hp.orientation.push_back(sets.task.orientation_bounds.empty() ? world::AngleBox{}
                                                                  : sets.task.orientation_bounds[idx]);
  }

  const Prediction pr = predict(x0, n, config.dt);
  CostBuilder cb(nz);
  const double w_path = config.w_path * params.path_weight;
  for (int k = 0; k < n; ++k) {
    const double wp = w_path + (k == n - 1 ? config.w_terminal * params.terminal_weight : 0.0);
    for (int i = 0; i < 3; ++i) {
      cb.add(pr.p[k].row(i), pr.p0[k](i) - hp.ref.p[k](i), wp);
      cb.add(pr.v[k].row(i), pr.v0[k](i) - hp.ref.v[k](i), config.w_velocity);
    }
    for (int m = 0; m < 2; ++m) {
      cb.add(pr.e[k].row(m), pr.e0[k](m) - hp.ref.e(m), config.w_orientation);
      cb.add(pr.er[k].row(m), pr.er0[k](m), config.w_orientation_rate);
    }
    for (int c = 0; c < kNu; ++c) {
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(nz);
      a(u_index(k, c)) = 1;
      cb.add(a, 0.0, config.w_input);
      Eigen::RowVectorXd d = Eigen::RowVectorXd::Zero(nz);
      d(u_index(k, c)) = 1;
      double b = 0;
      if (k == 0) {
        b = -(c < 3 ? u0.a(c) : u0.e_acc(c - 3));
      } else {
        d(u_index(k - 1, c)) = -1;
      }
      cb.add(d, b, config.w_input_rate);
    }
    for (int gi = 0; gi < kNs; ++gi) {
      cb.H(s_index(n, k, gi), s_index(n, k, gi)) += config.w_slack;
      cb.g(s_index(n, k, gi)) += config.slack_l1;
    }
  }
  hp.qp.H = cb.H;
  hp.qp.g = cb.g;
  hp.constant = cb.c;

  // Inequalities, row by row.
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  auto add_row = [&](Eigen::RowVectorXd a, double b) {
    rows.push_back(std::move(a));
    rhs.push_back(b);
  };
  const auto& lim = sets.robot;
  const double v_axis = lim.v_max / std::sqrt(3.0);
  for (int k = 0; k < n; ++k) {
    for (int c = 0; c < kNu; ++c) {
      const double bound = c < 3 ? lim.a_max : lim.e_acc_max;
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(nz);
      a(u_index(k, c)) = 1;
      add_row(a, bound);
      add_row(-a, bound);
    }
    // region: n . p_k - s <= b
    if (nr > 0) {
      for (const auto& h : regions[hp.regions[k]].halfspaces()) {
        Eigen::RowVectorXd a = h.normal.transpose() * pr.p[k];
        a(s_index(n, k, kRegionSlack)) = -1;
        add_row(a, h.offset - h.normal.dot(pr.p0[k]));
      }
    }
    const world::AngleBox& ob = hp.orientation[k];
    for (int m = 0; m < 2; ++m) {
      Eigen::RowVectorXd a = pr.e[k].row(m);
      a(s_index(n, k, kOrientationSlack)) = -1;
      add_row(a, ob.hi(m) - pr.e0[k](m));
      Eigen::RowVectorXd b = -pr.e[k].row(m);
      b(s_index(n, k, kOrientationSlack)) = -1;
      add_row(b, pr.e0[k](m) - ob.lo(m));
    }
    for (int i = 0; i < 3; ++i) {
      for (double sign : {1.0, -1.0}) {
        Eigen::RowVectorXd a = sign * pr.v[k].row(i);
        a(s_index(n, k, kVelocitySlack)) = -1;
        add_row(a, v_axis - sign * pr.v0[k](i));
      }
    }
    for (int m = 0; m < 2; ++m) {
      for (double sign : {1.0, -1.0}) {
        Eigen::RowVectorXd a = sign * pr.er[k].row(m);
        a(s_index(n, k, kVelocitySlack)) = -1;
        add_row(a, lim.e_rate_max - sign * pr.er0[k](m));
      }
    }
    for (int gi = 0; gi < kNs; ++gi) {
      Eigen::RowVectorXd a = Eigen::RowVectorXd::Zero(nz);
      a(s_index(n, k, gi)) = -1;
      add_row(a, 0.0);
    }
  }
  hp.qp.Ain.resize(static_cast<Eigen::Index>(rows.size()), nz);
  hp.qp.bin.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    hp.qp.Ain.row(static_cast<Eigen::Index>(r)) = rows[r];
    hp.qp.bin(static_cast<Eigen::Index>(r)) = rhs[r];
  }
  hp.qp.normalize();
  return hp;
}

double rollout_cost(const HorizonProblem& hp, const Eigen::VectorXd& z) {
  const auto& cfg = hp.config;
  const int n = cfg.horizon;
  const auto u = inputs_of(z, n);
  EEState x = hp.x0;
  double cost = 0;
  const double w_path = cfg.w_path * hp.params.path_weight;
  for (int k = 0; k < n; ++k) {
    x = advance(x, u[k], cfg.dt);
    const double wp = w_path + (k == n - 1 ? cfg.w_terminal * hp.params.terminal_weight : 0.0);
    cost += wp * (x.p - hp.ref.p[k]).squaredNorm();
    cost += cfg.w_velocity * (x.v - hp.ref.v[k]).squaredNorm();
    cost += cfg.w_orientation * (x.e - hp.ref.e).squaredNorm();
    cost += cfg.w_orientation_rate * x.e_rate.squaredNorm();
    const ControlInput& prev = k == 0 ? hp.u0 : u[k - 1];
    cost += cfg.w_input * (u[k].a.squaredNorm() + u[k].e_acc.squaredNorm());
    cost += cfg.w_input_rate * ((u[k].a - prev.a).squaredNorm() + (u[k].e_acc - prev.e_acc).squaredNorm());
    for (int gi = 0; gi < kNs; ++gi) {
      const double s = z(s_index(n, k, gi));
      cost += 0.5 * cfg.w_slack * s * s + cfg.slack_l1 * s;
    }
  }
  return cost;
}

Eigen::VectorXd cost_gradient(const HorizonProblem& hp, const Eigen::VectorXd& z) { return hp.qp.H * z + hp.qp.g; }

std::array<double, 3> violations(const EEState& x, const AdmissibleSets& sets, int region) {
  std::array<double, 3> v{0, 0, 0};
  const auto& c = sets.task;
  if (!c.regions.empty()) {
    const int r = std::clamp(region, 0, static_cast<int>(c.regions.size()) - 1);
    v[kRegionSlack] = std::max(0.0, c.regions[r].violation(x.p));
    v[kOrientationSlack] = c.orientation_bounds[r].violation(x.e);
  }
  const double v_axis = sets.robot.v_max / std::sqrt(3.0);
  v[kVelocitySlack] = std::max({0.0, x.v.cwiseAbs().maxCoeff() - v_axis, x.e_rate.cwiseAbs().maxCoeff() - sets.robot.e_rate_max});
  return v;
}

HorizonSolution step(const EEState& x0, const ControlInput& u0, const AdmissibleSets& sets, const CostParams& params,
                     double progress, const StepHints& hints, const ControllerConfig& config) {
  if (!x0.finite()) throw std::invalid_argument("step: non-finite state");
  if (!sets.robot.valid() || sets.task.regions.empty()) throw std::invalid_argument("step: invalid admissible sets");
  const int n = config.horizon;
  HorizonProblem hp = build_problem(x0, u0, sets, params, progress, hints, config);
  auto r = math::solve_qp(hp.qp);
  if (r.ok() && !r.x.allFinite()) r.status = math::QpStatus::not_convex;

  HorizonSolution sol;
  sol.status = r.status;
  sol.regions = hp.regions;
  Eigen::VectorXd z;
  if (r.ok()) {
    z = r.x;
    sol.inputs = inputs_of(z, n);
    sol.cost = r.objective + hp.constant;
  } else {
    // Degraded mode: previous plan shifted by one step, braking at the end.
    sol.degraded = true;
    if (hints.previous && hints.previous->inputs.size() == static_cast<std::size_t>(n)) {
      sol.inputs.assign(hints.previous->inputs.begin() + 1, hints.previous->inputs.end());
      sol.inputs.push_back(ControlInput{});
    } else {
      sol.inputs.assign(n, ControlInput{});
    }
    for (auto& u : sol.inputs) {
      u.a = u.a.cwiseMax(-sets.robot.a_max).cwiseMin(sets.robot.a_max);
      u.e_acc = u.e_acc.cwiseMax(-sets.robot.e_acc_max).cwiseMin(sets.robot.e_acc_max);
    }
    z = Eigen::VectorXd::Zero((kNu + kNs) * n);
  }
  sol.states.push_back(x0);
  for (int k = 0; k < n; ++k) sol.states.push_back(advance(sol.states.back(), sol.inputs[k], config.dt));
  for (int k = 0; k < n; ++k) {
    if (r.ok()) {
      sol.slack.push_back({std::max(0.0, z(s_index(n, k, 0))), std::max(0.0, z(s_index(n, k, 1))),
                           std::max(0.0, z(s_index(n, k, 2)))});
    } else {
      sol.slack.push_back(violations(sol.states[k + 1], sets, hp.regions[k]));
    }
  }
  if (!r.ok()) {
    Eigen::VectorXd zz = Eigen::VectorXd::Zero((kNu + kNs) * n);
    for (int k = 0; k < n; ++k) {
      for (int c = 0; c < 3; ++c) zz(u_index(k, c)) = sol.inputs[k].a(c);
      for (int c = 0; c < 2; ++c) zz(u_index(k, 3 + c)) = sol.inputs[k].e_acc(c);
      for (int gi = 0; gi < kNs; ++gi) zz(s_index(n, k, gi)) = sol.slack[k][gi];
    }
    sol.cost = rollout_cost(hp, zz);
  }
  return sol;
}

CostParams apply_event(const CostParams& params, const resolver::InstructionEvent& event,
                       const ControllerConfig& config) {
  CostParams out = params;
  if (event.cost_params) {
    out = *event.cost_params;
  } else {
    for (const auto& c : event.constraints) {
      if (c.kind != resolver::ConstraintKind::manner) continue;
      if (const auto* s = std::get_if<resolver::SpeedScale>(&c.payload)) out.speed_weight *= s->factor;
    }
  }
  out.speed_weight = std::clamp(out.speed_weight, 1.0 / config.max_speed_weight, config.max_speed_weight);
  return out;
}

}  // namespace steer::control
