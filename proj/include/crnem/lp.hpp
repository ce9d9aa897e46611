#pragma once

#include <Eigen/Dense>

namespace crnem::lp {

enum class Status { optimal, infeasible, unbounded };

struct Result {
  Status status = Status::infeasible;
  Eigen::VectorXd x;  ///< primal solution when optimal
  double objective = 0.0;
};

/// Dense two-phase simplex with Bland's rule:
///   minimize c.x  subject to  A x = b,  x >= 0.
/// Intended for the small systems that arise from network analyses.
Result minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                double tol = 1e-10);

}  // namespace crnem::lp
