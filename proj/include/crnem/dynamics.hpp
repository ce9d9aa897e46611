#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crnem/network.hpp"

namespace crnem::dynamics {

/// Network flattened for fast mass-action evaluation.
class MassActionSystem {
 public:
  explicit MassActionSystem(const crn::ReactionNetwork& net);

  std::size_t dimension() const noexcept { return dim_; }

  /// Σ_r (y'_r - y_r) k_r x^{y_r}, with 0^0 = 1. No sign checks: Jacobian
  /// stencils may probe slightly negative states.
  void evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const;
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;

 private:
  struct Factor {
    Eigen::Index species;
    int power;
  };
  struct Change {
    Eigen::Index species;
    double delta;
  };
  struct Term {
    double rate;
    std::vector<Factor> reactants;
    std::vector<Change> changes;
  };
  std::size_t dim_ = 0;
  std::vector<Term> terms_;
};

/// Throws ValidationError on negative components or a size mismatch.
Eigen::VectorXd mass_action_rhs(const crn::ReactionNetwork& net, const Eigen::VectorXd& state);

enum class LyapunovMode { e, m, em };

/// How to read D off a state of a compiled system:
///   e  : D(x ‖ y_ref)           x from state, y_ref fixed
///   m  : D(x_data ‖ y_A(θ))      θ from state, x_data fixed
///   em : D(x ‖ y_A(θ))           both from state
struct DivergenceModel {
  LyapunovMode mode = LyapunovMode::e;
  std::vector<std::size_t> x_index;
  std::vector<std::size_t> theta_index;
  std::vector<std::vector<int>> design;  ///< A, m x n
  std::vector<double> scale;             ///< c, length n
  std::vector<double> y_ref;
  std::vector<double> x_data;

  /// y_A(θ) = (c_j θ^{a_.j})_j
  std::vector<double> family_point(const std::vector<double>& theta) const;
  double value(const Eigen::VectorXd& state) const;
  /// Chain-rule dD/dt along the velocity field `rate`.
  double derivative(const Eigen::VectorXd& state, const Eigen::VectorXd& rate) const;
};

struct SimOptions {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double t_max = 1e5;
  double tol_ss = 1e-10;
  int steady_window = 10;  ///< consecutive accepted steps below tol_ss
  std::size_t max_steps = 20'000'000;
  /// Stored samples are halved (stride doubled) whenever this many accumulate.
  std::size_t max_samples = 1'000'000;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<double> lyapunov;       ///< NaN-free; empty when no model is given
  std::vector<double> lyapunov_rate;  ///< analytic dD/dt per sample
  std::vector<double> conservation_residual;

  std::size_t size() const noexcept { return times.size(); }
};

enum class Stability { stable, unstable, marginal };
enum class SimStatus { converged, t_max_reached, step_underflow };

const char* to_string(Stability s);
const char* to_string(SimStatus s);

struct EquilibriumReport {
  Eigen::VectorXd state;
  double derivative_norm = 0.0;
  std::optional<double> dD_dt;
  std::optional<Stability> stability;
  std::vector<double> eigen_real_parts;  ///< restricted to the stoichiometric subspace
  bool converged = false;
  SimStatus status = SimStatus::t_max_reached;
  double t_final = 0.0;
  std::size_t accepted_steps = 0;
  std::size_t rejected_steps = 0;
};

struct SimulationSetup {
  std::optional<DivergenceModel> lyapunov;
  /// Rows are linear conservation functionals; defaults to a basis of H_R⊥.
  std::optional<Eigen::MatrixXd> conservation;
};

struct SimulationResult {
  Trajectory trajectory;
  EquilibriumReport report;
};

/// Adaptive Dormand–Prince 5(4) integration with positivity-preserving step
/// rejection; stops at a sustained steady state or at t_max.
SimulationResult simulate(const crn::ReactionNetwork& net, const Eigen::VectorXd& init,
                          const SimOptions& opts = {}, const SimulationSetup& setup = {});

struct LyapunovSeries {
  std::vector<double> values;
  std::vector<double> fd_derivative;  ///< forward differences, size values-1
  double max_increase = 0.0;          ///< largest upward jump between samples
};

LyapunovSeries lyapunov_series(const Trajectory& traj, const DivergenceModel& model);

/// Central-difference Jacobian restricted to H_R; throws ValidationError if
/// the point is not (numerically) an equilibrium.
EquilibriumReport classify_equilibrium(const crn::ReactionNetwork& net, const Eigen::VectorXd& point);

/// Newton's method for rhs = 0 inside the stoichiometric class of `guess`.
std::optional<Eigen::VectorXd> refine_equilibrium(const crn::ReactionNetwork& net,
                                                  const Eigen::VectorXd& guess);

struct RateFit {
  std::optional<double> rate;  ///< fitted λ in D(t) - D* ~ exp(-λ t)
  std::size_t samples = 0;
  std::string note;
};

RateFit convergence_rate_diagnostic(const Trajectory& traj);

}  // namespace crnem::dynamics
