#include "crnem/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "crnem/entropy.hpp"
#include "crnem/error.hpp"
#include "crnem/integrator.hpp"

namespace crnem::dynamics {

MassActionSystem::MassActionSystem(const crn::ReactionNetwork& net) : dim_(net.species_count()) {
  for (const auto& r : net.reactions()) {
    Term t{r.rate, {}, {}};
    for (std::size_t i = 0; i < dim_; ++i) {
      const auto idx = static_cast<Eigen::Index>(i);
      if (r.reactant[i] > 0) t.reactants.push_back({idx, r.reactant[i]});
      if (const int d = r.product[i] - r.reactant[i]; d != 0) t.changes.push_back({idx, double(d)});
    }
    terms_.push_back(std::move(t));
  }
}

void MassActionSystem::evaluate(const Eigen::VectorXd& x, Eigen::VectorXd& out) const {
  out.setZero(static_cast<Eigen::Index>(dim_));
  for (const auto& t : terms_) {
    double flux = t.rate;
    for (const auto& f : t.reactants) {
      const double v = x(f.species);
      switch (f.power) {
        case 1: flux *= v; break;
        case 2: flux *= v * v; break;
        case 3: flux *= v * v * v; break;
        default: flux *= std::pow(v, f.power);
      }
    }
    for (const auto& c : t.changes) out(c.species) += c.delta * flux;
  }
}

Eigen::VectorXd MassActionSystem::evaluate(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out;
  evaluate(x, out);
  return out;
}

Eigen::VectorXd mass_action_rhs(const crn::ReactionNetwork& net, const Eigen::VectorXd& state) {
  if (state.size() != static_cast<Eigen::Index>(net.species_count()))
    throw ValidationError("state dimension does not match species count");
  if ((state.array() < 0.0).any()) throw ValidationError("negative state component");
  return MassActionSystem(net).evaluate(state);
}

// ---- divergence ----------------------------------------------------------

std::vector<double> DivergenceModel::family_point(const std::vector<double>& theta) const {
  const std::size_t n = scale.size();
  std::vector<double> y(n);
  for (std::size_t j = 0; j < n; ++j) {
    double v = scale[j];
    for (std::size_t i = 0; i < design.size(); ++i)
      if (design[i][j] != 0) v *= std::pow(theta[i], design[i][j]);
    y[j] = v;
  }
  return y;
}

namespace {

std::vector<double> gather(const Eigen::VectorXd& state, const std::vector<std::size_t>& idx) {
  std::vector<double> v(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) v[k] = state(static_cast<Eigen::Index>(idx[k]));
  return v;
}

double divergence(const std::vector<double>& x, const std::vector<double>& y) {
  double d = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) d += entropy_term(std::max(x[j], 0.0), std::max(y[j], 0.0));
  return d;
}

}  // namespace

double DivergenceModel::value(const Eigen::VectorXd& state) const {
  switch (mode) {
    case LyapunovMode::e: return divergence(gather(state, x_index), y_ref);
    case LyapunovMode::m: return divergence(x_data, family_point(gather(state, theta_index)));
    case LyapunovMode::em: return divergence(gather(state, x_index), family_point(gather(state, theta_index)));
  }
  return 0.0;
}

double DivergenceModel::derivative(const Eigen::VectorXd& state, const Eigen::VectorXd& rate) const {
  double total = 0.0;
  std::vector<double> x = mode == LyapunovMode::m ? x_data : gather(state, x_index);
  std::vector<double> y;
  if (mode == LyapunovMode::e) {
    y = y_ref;
  } else {
    y = family_point(gather(state, theta_index));
  }
  if (mode != LyapunovMode::m) {
    // ∂D/∂x_j = log(x_j / y_j)
    for (std::size_t j = 0; j < x_index.size(); ++j) {
      const double xdot = rate(static_cast<Eigen::Index>(x_index[j]));
      if (xdot == 0.0) continue;
      total += std::log(x[j] / y[j]) * xdot;
    }
  }
  if (mode != LyapunovMode::e) {
    // ∂D/∂θ_i = Σ_j a_ij (y_j - x_j) / θ_i
    for (std::size_t i = 0; i < theta_index.size(); ++i) {
      const auto idx = static_cast<Eigen::Index>(theta_index[i]);
      const double theta = state(idx);
      const double thetadot = rate(idx);
      if (thetadot == 0.0) continue;
      double g = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) g += design[i][j] * (y[j] - x[j]);
      total += g / theta * thetadot;
    }
  }
  return total;
}

const char* to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

const char* to_string(SimStatus s) {
  switch (s) {
    case SimStatus::converged: return "converged";
    case SimStatus::t_max_reached: return "t_max_reached";
    case SimStatus::step_underflow: return "step_underflow";
  }
  return "?";
}

// ---- simulation ------------------------------------------------------------

namespace {

class Recorder {
 public:
  Recorder(const crn::ReactionNetwork& net, const Eigen::VectorXd& init, const SimulationSetup& setup,
           std::size_t max_samples)
      : model_(setup.lyapunov), max_samples_(max_samples) {
    functionals_ = setup.conservation ? *setup.conservation
                                      : Eigen::MatrixXd(crn::conservation_basis(net).transpose());
    if (functionals_.cols() != init.size())
      throw ValidationError("conservation functionals do not match state dimension");
    baseline_ = functionals_ * init;
  }

  /// Records accepted step `step` if it falls on the current stride.
  void offer(Trajectory& traj, std::size_t step, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
    last_offered_ = step;
    if (step % stride_ != 0) return;
    record(traj, t, x, f);
    last_recorded_ = step;
    if (max_samples_ > 1 && traj.size() >= max_samples_) thin(traj);
  }

  void finish(Trajectory& traj, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& f) {
    if (last_offered_ != last_recorded_) record(traj, t, x, f);
  }

  void record(Trajectory& traj, double t, const Eigen::VectorXd& x, const Eigen::VectorXd& f) const {
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (model_) {
      traj.lyapunov.push_back(model_->value(x));
      traj.lyapunov_rate.push_back(model_->derivative(x, f));
    }
    traj.conservation_residual.push_back(
        functionals_.rows() == 0 ? 0.0 : (functionals_ * x - baseline_).cwiseAbs().maxCoeff());
  }

 private:
  // Keeps every other sample and doubles the stride.
  void thin(Trajectory& traj) {
    auto halve = [](auto& v) {
      std::size_t keep = 0;
      for (std::size_t k = 0; k < v.size(); k += 2) v[keep++] = std::move(v[k]);
      v.resize(keep);
    };
    halve(traj.times);
    halve(traj.states);
    if (!traj.lyapunov.empty()) {
      halve(traj.lyapunov);
      halve(traj.lyapunov_rate);
    }
    halve(traj.conservation_residual);
    stride_ *= 2;
    if (last_recorded_ % stride_ != 0) last_recorded_ = static_cast<std::size_t>(-1);
  }

  const std::optional<DivergenceModel>& model_;
  Eigen::MatrixXd functionals_;
  Eigen::VectorXd baseline_;
  std::size_t max_samples_;
  std::size_t stride_ = 1;
  std::size_t last_offered_ = 0;
  std::size_t last_recorded_ = 0;
};

bool steady(const Eigen::VectorXd& f, const Eigen::VectorXd& x, double tol) {
  const double fn = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  const double xn = x.size() ? x.cwiseAbs().maxCoeff() : 0.0;
  return fn < tol * (1.0 + xn);
}

}  // namespace

SimulationResult simulate(const crn::ReactionNetwork& net, const Eigen::VectorXd& init,
                          const SimOptions& opts, const SimulationSetup& setup) {
  if (init.size() != static_cast<Eigen::Index>(net.species_count()))
    throw ValidationError("initial state dimension does not match species count");
  if ((init.array() < 0.0).any() || !init.allFinite())
    throw ValidationError("initial state must be finite and nonnegative");
  if (!(opts.rel_tol > 0) || !(opts.abs_tol > 0) || !(opts.tol_ss > 0) || !(opts.t_max >= 0))
    throw ValidationError("solver options must be positive");

  const MassActionSystem system(net);
  ode::DormandPrince54 stepper([&system](const Eigen::VectorXd& y, Eigen::VectorXd& dy) { system.evaluate(y, dy); },
                               opts.rel_tol, opts.abs_tol);
  Recorder recorder(net, init, setup, opts.max_samples);

  SimulationResult result;
  Trajectory& traj = result.trajectory;
  EquilibriumReport& rep = result.report;

  double t = 0.0;
  Eigen::VectorXd x = init;
  Eigen::VectorXd f = system.evaluate(x);
  recorder.record(traj, t, x, f);

  int steady_count = 0;
  rep.status = SimStatus::t_max_reached;
  double h = opts.t_max > 0 ? stepper.initial_step(x, f, opts.t_max) : 0.0;
  while (t < opts.t_max && rep.accepted_steps < opts.max_steps) {
    h = std::min(h, opts.t_max - t);
    if (h <= 1e-14 * std::max(1.0, t)) {
      rep.status = SimStatus::step_underflow;
      break;
    }
    ode::TrialStep trial = stepper.attempt(x, f, h);
    const bool finite = trial.y.allFinite() && std::isfinite(trial.error_norm);
    const bool below = finite && (trial.y.array() < -opts.abs_tol).any();
    if (!finite || below) {
      h *= 0.5;
      ++rep.rejected_steps;
      continue;
    }
    if (trial.error_norm > 1.0) {
      h *= ode::DormandPrince54::reject_factor(trial.error_norm);
      ++rep.rejected_steps;
      continue;
    }

    t += h;
    ++rep.accepted_steps;
    const double next_factor = stepper.accept_factor(trial.error_norm);
    x = std::move(trial.y);
    if ((x.array() < 0.0).any()) {
      x = x.cwiseMax(0.0);
      f = system.evaluate(x);
    } else {
      f = std::move(trial.f);
    }
    recorder.offer(traj, rep.accepted_steps, t, x, f);
    h *= next_factor;
    if (trial.stiffness > 0) h = std::min(h, ode::kDampedStepBound / trial.stiffness);

    steady_count = steady(f, x, opts.tol_ss) ? steady_count + 1 : 0;
    if (steady_count >= opts.steady_window) {
      rep.status = SimStatus::converged;
      break;
    }
  }

  recorder.finish(traj, t, x, f);
  rep.state = x;
  rep.t_final = t;
  rep.converged = rep.status == SimStatus::converged;
  rep.derivative_norm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (setup.lyapunov) rep.dD_dt = setup.lyapunov->derivative(x, f);
  if (rep.converged && steady(f, x, 1e-7)) {
    const EquilibriumReport cls = classify_equilibrium(net, x);
    rep.stability = cls.stability;
    rep.eigen_real_parts = cls.eigen_real_parts;
  }
  return result;
}

LyapunovSeries lyapunov_series(const Trajectory& traj, const DivergenceModel& model) {
  LyapunovSeries s;
  s.values.reserve(traj.size());
  for (const auto& x : traj.states) s.values.push_back(model.value(x));
  for (std::size_t k = 1; k < s.values.size(); ++k) {
    const double dt = traj.times[k] - traj.times[k - 1];
    const double dv = s.values[k] - s.values[k - 1];
    s.fd_derivative.push_back(dt > 0 ? dv / dt : 0.0);
    if (std::isfinite(dv)) s.max_increase = std::max(s.max_increase, dv);
  }
  return s;
}

// ---- equilibria ------------------------------------------------------------

namespace {

Eigen::MatrixXd jacobian(const MassActionSystem& sys, const Eigen::VectorXd& p) {
  const Eigen::Index n = p.size();
  Eigen::MatrixXd j(n, n);
  Eigen::VectorXd plus, minus;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = 1e-6 * (1.0 + std::abs(p(i)));
    Eigen::VectorXd q = p;
    q(i) = p(i) + h;
    sys.evaluate(q, plus);
    q(i) = p(i) - h;
    sys.evaluate(q, minus);
    j.col(i) = (plus - minus) / (2.0 * h);
  }
  return j;
}

}  // namespace

EquilibriumReport classify_equilibrium(const crn::ReactionNetwork& net, const Eigen::VectorXd& point) {
  if (point.size() != static_cast<Eigen::Index>(net.species_count()))
    throw ValidationError("point dimension does not match species count");
  const MassActionSystem sys(net);
  const Eigen::VectorXd f = sys.evaluate(point);
  EquilibriumReport rep;
  rep.state = point;
  rep.derivative_norm = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (!steady(f, point, 1e-7)) throw ValidationError("point is not an equilibrium");
  rep.converged = true;
  rep.status = SimStatus::converged;

  const Eigen::MatrixXd q = crn::stoichiometric_subspace(net);
  if (q.cols() == 0) {
    rep.stability = Stability::marginal;
    return rep;
  }
  const Eigen::MatrixXd restricted = q.transpose() * jacobian(sys, point) * q;
  Eigen::EigenSolver<Eigen::MatrixXd> es(restricted, false);
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
    rep.eigen_real_parts.push_back(es.eigenvalues()(i).real());
  std::sort(rep.eigen_real_parts.begin(), rep.eigen_real_parts.end());
  const double top = rep.eigen_real_parts.back();
  rep.stability = top < -1e-8 ? Stability::stable : top > 1e-8 ? Stability::unstable : Stability::marginal;
  return rep;
}

std::optional<Eigen::VectorXd> refine_equilibrium(const crn::ReactionNetwork& net,
                                                  const Eigen::VectorXd& guess) {
  const MassActionSystem sys(net);
  const Eigen::MatrixXd q = crn::stoichiometric_subspace(net);
  Eigen::VectorXd x = guess;
  for (int iter = 0; iter < 100; ++iter) {
    const Eigen::VectorXd f = sys.evaluate(x);
    if (steady(f, x, 1e-13)) return x;
    if (q.cols() == 0) return std::nullopt;
    const Eigen::MatrixXd jr = q.transpose() * jacobian(sys, x) * q;
    const Eigen::VectorXd step = jr.fullPivLu().solve(-(q.transpose() * f));
    if (!step.allFinite()) return std::nullopt;
    // damp so the iterate stays in the nonnegative orthant
    Eigen::VectorXd dx = q * step;
    double alpha = 1.0;
    while (alpha > 1e-8 && ((x + alpha * dx).array() < 0.0).any()) alpha *= 0.5;
    x += alpha * dx;
  }
  return steady(sys.evaluate(x), x, 1e-10) ? std::optional<Eigen::VectorXd>(x) : std::nullopt;
}

RateFit convergence_rate_diagnostic(const Trajectory& traj) {
  RateFit fit;
  if (traj.lyapunov.size() < 4) {
    fit.note = "trajectory too short";
    return fit;
  }
  const double final_value = traj.lyapunov.back();
  const double floor = 1e-13 * (1.0 + std::abs(final_value));
  // leading stretch where D is still measurably above its final value
  std::size_t usable = 0;
  while (usable + 1 < traj.lyapunov.size() && traj.lyapunov[usable] - final_value > floor) ++usable;
  if (usable < 3) {
    fit.note = "series is constant to within rounding; rate undefined";
    return fit;
  }
  const double t_mid = 0.5 * traj.times[usable - 1];
  double st = 0, sy = 0, stt = 0, sty = 0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < usable; ++i) {
    if (traj.times[i] < t_mid) continue;
    const double v = traj.lyapunov[i] - final_value;
    if (!(v > 0)) {
      fit.note = "nonpositive value after offset";
      return fit;
    }
    const double t = traj.times[i], y = std::log(v);
    st += t, sy += y, stt += t * t, sty += t * y;
    ++k;
  }
  fit.samples = k;
  const double denom = static_cast<double>(k) * stt - st * st;
  if (k < 3 || denom <= 0) {
    fit.note = "too few samples in the trailing window";
    return fit;
  }
  const double slope = (static_cast<double>(k) * sty - st * sy) / denom;
  fit.rate = -slope;
  fit.note = "least-squares fit over trailing half";
  return fit;
}

}  // namespace crnem::dynamics
