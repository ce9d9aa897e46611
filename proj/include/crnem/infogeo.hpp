#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "crnem/intlat.hpp"
#include "crnem/schemes.hpp"

namespace crnem::infogeo {

struct DivergenceValue {
  double value = 0.0;  ///< in [0, +inf]
  bool finite = true;
};

/// D(x‖y) = Σ x log(x/y) - x + y; throws ValidationError on a length mismatch.
DivergenceValue relative_entropy(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

struct PythagoreanTerms {
  double orthogonality = 0.0;  ///< (P - Q)·(log Q - log R)
  double identity_gap = 0.0;   ///< D(P‖Q) + D(Q‖R) - D(P‖R)
};

PythagoreanTerms pythagorean_check(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& r);

struct ProjectionResult {
  Eigen::VectorXd point;  ///< Birch point, x*, or θ̂
  Eigen::VectorXd image;  ///< y_A(θ̂) for M-projections, empty otherwise
  DivergenceValue objective;
  std::size_t iterations = 0;
  double kkt_residual = 0.0;
  bool converged = false;
};

/// The unique point of (α + V⊥) ∩ exp(v0 + V), V spanned by the columns of `v`.
ProjectionResult birch_point(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& v,
                             const std::optional<Eigen::VectorXd>& v0 = std::nullopt,
                             const std::optional<Eigen::VectorXd>& start = std::nullopt);

/// argmin D(x‖y) over {x >= 0 | S x = S x0}.
ProjectionResult e_project_oracle(const Eigen::VectorXd& y, const intlat::IntMatrix& s, const Eigen::VectorXd& x0);

/// argmin over θ of D(x‖y_A(θ)); `point` is θ̂ and `image` is y_A(θ̂).
ProjectionResult m_project_oracle(const Eigen::VectorXd& x, const intlat::IntMatrix& a, const Eigen::VectorXd& c,
                                  const std::optional<Eigen::VectorXd>& theta_start = std::nullopt);

struct EMResult {
  Eigen::VectorXd x;
  Eigen::VectorXd theta;
  DivergenceValue objective;
  std::size_t rounds = 0;
  bool converged = false;
};

/// Alternating E- and M-projections from theta_start (default spec.theta0).
EMResult em_alternating_oracle(const schemes::ModelSpec& spec,
                               const std::optional<Eigen::VectorXd>& theta_start = std::nullopt,
                               std::size_t max_rounds = 200000);

/// Maximum-likelihood direction (θ1, θ2) with θ1 + θ2 = 1 for the die model.
Eigen::Vector2d die_mle_brute_force(unsigned s1, unsigned s2);

/// Log-likelihood of the die model at direction p = θ1 / (θ1 + θ2).
double die_log_likelihood(unsigned s1, unsigned s2, double p);

}  // namespace crnem::infogeo
