#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "crnem/dynamics.hpp"
#include "crnem/schemes.hpp"

namespace crnem::cli {

/// Log-uniform draws in [1e-2, 1e2] per component.
std::vector<Eigen::VectorXd> draw_theta_starts(std::size_t dim, std::size_t count, std::uint64_t seed);

struct StartOutcome {
  Eigen::VectorXd theta_start;
  dynamics::SimulationResult sim;
  double lyapunov_initial = 0.0;
  double lyapunov_rise = 0.0;
  double conservation_drift = 0.0;
  double conservation_scale = 1.0;

  bool lyapunov_ok() const { return lyapunov_rise <= 1e-8 * (1 + lyapunov_initial); }
  bool conservation_ok() const { return conservation_drift < 1e-6 * conservation_scale; }
};

/// Simulates the EM system of `spec` from each θ start on a worker pool;
/// results come back in start order.
std::vector<StartOutcome> run_starts(const schemes::ModelSpec& spec, const std::vector<Eigen::VectorXd>& starts,
                                     const dynamics::SimOptions& opts, std::size_t threads = 0);

struct Equilibrium {
  Eigen::VectorXd state;
  dynamics::Stability stability = dynamics::Stability::marginal;
  bool interior = false;
  std::vector<std::size_t> runs;  ///< empty when found by Newton refinement
  std::optional<double> oracle_deviation;
};

/// Distinct converged end states, plus unstable points found by Newton
/// refinement between pairs of stable ones.
std::vector<Equilibrium> collect_equilibria(const schemes::ModelSpec& spec, const schemes::CompiledSystem& sys,
                                            const std::vector<StartOutcome>& runs);

/// max relative gap between (x, y_A(θ)) and its alternating E/M projections.
double fixed_point_deviation(const schemes::ModelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& theta);

struct VerifyOptions {
  std::size_t starts = 8;
  std::uint64_t seed = 0;
  dynamics::SimOptions sim;
  std::optional<std::string> example;  ///< enables the stored reference values
  std::size_t threads = 0;
};

struct VerifyResult {
  nlohmann::ordered_json report;
  bool passed = false;
};

/// compile -> multi-start simulate -> oracle comparison, with Lyapunov and
/// conservation audits of every run.
VerifyResult verify(const schemes::ModelSpec& spec, const VerifyOptions& opts);

nlohmann::ordered_json to_json(const Eigen::VectorXd& v);

}  // namespace crnem::cli
