#pragma once

#include <Eigen/Dense>
#include <string_view>
#include <vector>

namespace steer::math {

// minimize   0.5 x'Hx + g'x
// subject to Aeq x  = beq
//            Ain x <= bin
// H must be symmetric positive definite.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd Aeq;
  Eigen::VectorXd beq;
  Eigen::MatrixXd Ain;
  Eigen::VectorXd bin;

  int variables() const { return static_cast<int>(g.size()); }
  // Fills empty constraint blocks with correctly shaped zero-row matrices.
  void normalize();
};

enum class QpStatus { optimal, infeasible, max_iterations, not_convex };

std::string_view to_string(QpStatus status);

struct QpResult {
  QpStatus status = QpStatus::infeasible;
  Eigen::VectorXd x;
  // Multipliers with H x + g + Aeq' lambda_eq + Ain' lambda_in = 0, lambda_in >= 0.
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd lambda_in;
  std::vector<int> active;  // active inequality rows
  double objective = 0;
  int iterations = 0;

  bool ok() const { return status == QpStatus::optimal; }
};

struct QpOptions {
  double feasibility_tol = 1e-10;
  int max_iterations = 0;  // 0: 10 * (n + rows)
};

// Dual active-set method of Goldfarb and Idnani. Starts from the
// unconstrained minimizer and adds violated constraints one at a time,
// keeping the Cholesky-derived basis J = L^-T in factored form.
QpResult solve_qp(QpProblem problem, const QpOptions& options = {});

// max of stationarity, primal infeasibility, dual sign and complementarity
// violations (infinity norms).
double kkt_residual(const QpProblem& problem, const QpResult& result);

}  // namespace steer::math
