#include "steer/math/qp.hpp"

#include <cmath>
#include <limits>

namespace steer::math {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

// State of the dual method. Active constraints are stored as normals n with
// n'x + c0 >= 0 (equalities: = 0); A holds ids, equalities as -1 - i.
struct Factors {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
  Eigen::VectorXd u;
  std::vector<int> A;
  int iq = 0;
  double r_norm = 1.0;
};

// Rotates d so that d(iq+1..n-1) = 0, appends column iq of R.
bool add_constraint(Factors& f, Eigen::VectorXd& d) {
  const int n = static_cast<int>(f.J.rows());
  for (int j = n - 1; j >= f.iq + 1; --j) {
    double cc = d(j - 1);
    double ss = d(j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    d(j) = 0.0;
    ss /= h;
    cc /= h;
    if (cc < 0.0) {
      cc = -cc;
      ss = -ss;
      d(j - 1) = -h;
    } else {
      d(j - 1) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = 0; k < n; ++k) {
      const double t1 = f.J(k, j - 1);
      const double t2 = f.J(k, j);
      f.J(k, j - 1) = t1 * cc + t2 * ss;
      f.J(k, j) = xny * (t1 + f.J(k, j - 1)) - t2;
    }
  }
  ++f.iq;
  f.R.col(f.iq - 1).head(f.iq) = d.head(f.iq);
  if (std::abs(d(f.iq - 1)) <= kEps * f.r_norm) return false;  // dependent
  f.r_norm = std::max(f.r_norm, std::abs(d(f.iq - 1)));
  return true;
}

void delete_constraint(Factors& f, int id, int first_inequality) {
  const int n = static_cast<int>(f.J.rows());
  int qq = -1;
  for (int i = first_inequality; i < f.iq; ++i) {
    if (f.A[i] == id) {
      qq = i;
      break;
    }
  }
  if (qq < 0) return;
  for (int i = qq; i < f.iq - 1; ++i) {
    f.A[i] = f.A[i + 1];
    f.u(i) = f.u(i + 1);
    f.R.col(i) = f.R.col(i + 1);
  }
  f.A[f.iq - 1] = f.A[f.iq];
  f.u(f.iq - 1) = f.u(f.iq);
  f.A[f.iq] = 0;
  f.u(f.iq) = 0.0;
  f.R.col(f.iq - 1).head(f.iq).setZero();
  --f.iq;
  for (int j = qq; j < f.iq; ++j) {
    double cc = f.R(j, j);
    double ss = f.R(j + 1, j);
    const double h = std::hypot(cc, ss);
    if (h == 0.0) continue;
    cc /= h;
    ss /= h;
    f.R(j + 1, j) = 0.0;
    if (cc < 0.0) {
      f.R(j, j) = -h;
      cc = -cc;
      ss = -ss;
    } else {
      f.R(j, j) = h;
    }
    const double xny = ss / (1.0 + cc);
    for (int k = j + 1; k < f.iq; ++k) {
      const double t1 = f.R(j, k);
      const double t2 = f.R(j + 1, k);
      f.R(j, k) = t1 * cc + t2 * ss;
      f.R(j + 1, k) = xny * (t1 + f.R(j, k)) - t2;
    }
    for (int k = 0; k < n; ++k) {
      const double t1 = f.J(k, j);
      const double t2 = f.J(k, j + 1);
      f.J(k, j) = t1 * cc + t2 * ss;
      f.J(k, j + 1) = xny * (f.J(k, j) + t1) - t2;
    }
  }
}

// z = J2 d2 (primal step), r = R^-1 d1 (negative dual step).
void directions(const Factors& f, const Eigen::VectorXd& np, Eigen::VectorXd& d, Eigen::VectorXd& z,
                Eigen::VectorXd& r) {
  const int n = static_cast<int>(f.J.rows());
  d = f.J.transpose() * np;
  z = f.J.rightCols(n - f.iq) * d.tail(n - f.iq);
  r.setZero();
  if (f.iq > 0) {
    r.head(f.iq) = f.R.topLeftCorner(f.iq, f.iq).triangularView<Eigen::Upper>().solve(d.head(f.iq));
  }
}

}  // namespace

void QpProblem::normalize() {
  const Eigen::Index n = g.size();
  if (Aeq.size() == 0) {
    Aeq.resize(0, n);
    beq.resize(0);
  }
  if (Ain.size() == 0) {
    Ain.resize(0, n);
    bin.resize(0);
  }
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::optimal:
      return "optimal";
    case QpStatus::infeasible:
      return "infeasible";
    case QpStatus::max_iterations:
      return "max_iterations";
    case QpStatus::not_convex:
      return "not_convex";
  }
  return "?";
}

QpResult solve_qp(QpProblem problem, const QpOptions& options) {
  problem.normalize();
  const int n = problem.variables();
  const int me = static_cast<int>(problem.Aeq.rows());
  const int mi = static_cast<int>(problem.Ain.rows());

  QpResult out;
  out.x = Eigen::VectorXd::Zero(n);
  out.lambda_eq = Eigen::VectorXd::Zero(me);
  out.lambda_in = Eigen::VectorXd::Zero(mi);

  Eigen::LLT<Eigen::MatrixXd> llt(problem.H);
  if (llt.info() != Eigen::Success) {
    out.status = QpStatus::not_convex;
    return out;
  }

  Factors f;
  // J = L^-T
  f.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  f.R = Eigen::MatrixXd::Zero(n, n);
  f.u = Eigen::VectorXd::Zero(n + 1);
  f.A.assign(n + 1, 0);

  Eigen::VectorXd x = -llt.solve(problem.g);
  double fval = 0.5 * problem.g.dot(x);

  Eigen::VectorXd d(n), z(n), r(n + 1), np(n);

  // Equalities first: Aeq x - beq = 0.
  for (int i = 0; i < me; ++i) {
    np = problem.Aeq.row(i).transpose();
    directions(f, np, d, z, r);
    double t2 = 0.0;
    if (z.squaredNorm() > kEps) t2 = (problem.beq(i) - np.dot(x)) / z.dot(np);
    x += t2 * z;
    f.u(f.iq) = t2;
    f.u.head(f.iq) -= t2 * r.head(f.iq);
    fval += 0.5 * t2 * t2 * z.dot(np);
    f.A[f.iq] = -1 - i;
    if (!add_constraint(f, d)) {
      out.status = QpStatus::infeasible;  // dependent equality rows
      out.x = x;
      return out;
    }
  }

  // Inequalities in the >= 0 form: -Ain x + bin >= 0.
  auto slack = [&](int i, const Eigen::VectorXd& at) { return problem.bin(i) - problem.Ain.row(i).dot(at); };
  std::vector<char> active(mi, 0);
  std::vector<char> excluded(mi, 0);
  const int budget = options.max_iterations > 0 ? options.max_iterations : 10 * (n + me + mi) + 10;
  const double tol = options.feasibility_tol;

  int iter = 0;
  bool done = false;
  while (!done) {
    if (++iter > budget) {
      out.status = QpStatus::max_iterations;
      break;
    }
    std::fill(active.begin(), active.end(), 0);
    for (int k = me; k < f.iq; ++k) active[f.A[k]] = 1;
    std::fill(excluded.begin(), excluded.end(), 0);

    // Snapshot for the degenerate-add rollback.
    const Factors saved = f;
    const Eigen::VectorXd x_saved = x;
    const double f_saved = fval;

    bool restart = false;
    while (!restart) {
      // Most violated inactive constraint.
      int ip = -1;
      double worst = -tol;
      for (int i = 0; i < mi; ++i) {
        if (active[i] || excluded[i]) continue;
        const double s = slack(i, x) / std::max(1.0, problem.Ain.row(i).lpNorm<Eigen::Infinity>());
        if (s < worst) {
          worst = s;
          ip = i;
        }
      }
      if (ip < 0) {
        out.status = QpStatus::optimal;
        done = true;
        break;
      }
      np = -problem.Ain.row(ip).transpose();
      f.u(f.iq) = 0.0;
      f.A[f.iq] = ip;
      double s_ip = slack(ip, x);

      for (;;) {
        directions(f, np, d, z, r);
        double t1 = kInf;
        int l = -1;
        for (int k = me; k < f.iq; ++k) {
          if (r(k) > 0.0 && f.u(k) / r(k) < t1) {
            t1 = f.u(k) / r(k);
            l = f.A[k];
          }
        }
        const double zn = z.dot(np);
        const double t2 = z.squaredNorm() > kEps && zn > 0 ? -s_ip / zn : kInf;
        const double t = std::min(t1, t2);
        if (t >= kInf) {
          out.status = QpStatus::infeasible;
          out.x = x;
          return out;
        }
        if (t2 >= kInf) {
          // Dual step only.
          f.u.head(f.iq) -= t * r.head(f.iq);
          f.u(f.iq) += t;
          active[l] = 0;
          delete_constraint(f, l, me);
          continue;
        }
        x += t * z;
        fval += t * zn * (0.5 * t + f.u(f.iq));
        f.u.head(f.iq) -= t * r.head(f.iq);
        f.u(f.iq) += t;
        if (t == t2) {
          if (!add_constraint(f, d)) {
            // Numerically dependent: drop ip for this round and roll back.
            f = saved;
            x = x_saved;
            fval = f_saved;
            std::fill(active.begin(), active.end(), 0);
            for (int k = me; k < f.iq; ++k) active[f.A[k]] = 1;
            excluded[ip] = 1;
            break;
          }
          restart = true;
          break;
        }
        // Partial step: drop the blocking constraint and retry ip.
        active[l] = 0;
        delete_constraint(f, l, me);
        s_ip = slack(ip, x);
      }
    }
  }

  out.x = x;
  out.objective = 0.5 * x.dot(problem.H * x) + problem.g.dot(x);
  out.iterations = iter;
  for (int k = 0; k < f.iq; ++k) {
    if (f.A[k] < 0) {
      out.lambda_eq(-1 - f.A[k]) = -f.u(k);
    } else {
      out.lambda_in(f.A[k]) = f.u(k);
      out.active.push_back(f.A[k]);
    }
  }
  (void)fval;
  return out;
}

double kkt_residual(const QpProblem& p, const QpResult& r) {
  QpProblem q = p;
  q.normalize();
  double res = 0;
  Eigen::VectorXd grad = q.H * r.x + q.g;
  if (q.Aeq.rows() > 0) grad += q.Aeq.transpose() * r.lambda_eq;
  if (q.Ain.rows() > 0) grad += q.Ain.transpose() * r.lambda_in;
  res = grad.lpNorm<Eigen::Infinity>();
  for (Eigen::Index i = 0; i < q.Aeq.rows(); ++i) res = std::max(res, std::abs(q.Aeq.row(i).dot(r.x) - q.beq(i)));
  for (Eigen::Index i = 0; i < q.Ain.rows(); ++i) {
    const double c = q.Ain.row(i).dot(r.x) - q.bin(i);
    res = std::max(res, std::max(c, 0.0));
    res = std::max(res, std::max(-r.lambda_in(i), 0.0));
    res = std::max(res, std::abs(r.lambda_in(i) * c));
  }
  return res;
}

}  // namespace steer::math
