#pragma once

#include <functional>

#include <Eigen/Dense>

namespace crnem::ode {

using VectorField = std::function<void(const Eigen::VectorXd& y, Eigen::VectorXd& dydt)>;

/// One trial step of the Dormand–Prince 5(4) pair (autonomous systems).
struct TrialStep {
  Eigen::VectorXd y;       ///< 5th-order solution
  Eigen::VectorXd f;       ///< field at y (first stage of the next step)
  double error_norm = 0;   ///< RMS of the embedded error scaled by tolerances
  double stiffness = 0;    ///< local Lipschitz estimate |f(y7) - f(y6)| / |y7 - y6|
};

/// Steps with h * stiffness below this keep |R(hλ)| of the 5th-order
/// method under about 0.2 on the negative real axis.
inline constexpr double kDampedStepBound = 2.0;

class DormandPrince54 {
 public:
  DormandPrince54(VectorField f, double rel_tol, double abs_tol);

  TrialStep attempt(const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double h);

  /// Hairer's starting step heuristic.
  double initial_step(const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double h_max);

  /// PI step-size factor for an accepted step.
  double accept_factor(double error_norm);
  /// Shrink factor after a rejected step.
  static double reject_factor(double error_norm);

  void field(const Eigen::VectorXd& y, Eigen::VectorXd& out) const { f_(y, out); }

 private:
  VectorField f_;
  double rel_tol_;
  double abs_tol_;
  double previous_error_ = 1e-4;
  Eigen::VectorXd k2_, k3_, k4_, k5_, k6_, tmp_;
};

}  // namespace crnem::ode
