#include "crnem/infogeo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crnem/entropy.hpp"
#include "crnem/error.hpp"
#include "crnem/lp.hpp"

namespace crnem::infogeo {

namespace {

constexpr std::size_t kMaxNewton = 200;

Eigen::MatrixXd to_real(const intlat::IntMatrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c)
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = static_cast<double>(m.at_int64(r, c));
  return out;
}

// Orthonormal basis of the column space.
Eigen::MatrixXd column_basis(const Eigen::MatrixXd& m) {
  if (m.cols() == 0 || m.rows() == 0) return Eigen::MatrixXd(m.rows(), 0);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double cutoff = 1e-12 * std::max(1.0, sv.size() > 0 ? sv(0) : 0.0);
  Eigen::Index r = 0;
  while (r < sv.size() && sv(r) > cutoff) ++r;
  return svd.matrixU().leftCols(r);
}

struct DualSolution {
  Eigen::VectorXd lambda;
  std::size_t iterations = 0;
  bool converged = false;
};

// Damped Newton for  min_λ  Σ w_i exp((Mλ)_i) - b·λ,  whose stationarity
// condition is Mᵀ(w ∘ exp(Mλ)) = b.
DualSolution dual_newton(const Eigen::VectorXd& w, const Eigen::MatrixXd& m, const Eigen::VectorXd& b,
                         Eigen::VectorXd lambda, double gtol) {
  auto objective = [&](const Eigen::VectorXd& l, Eigen::VectorXd& e) {
    e = (w.array() * (m * l).array().exp()).matrix();
    return e.sum() - b.dot(l);
  };
  DualSolution out;
  Eigen::VectorXd e, e_new;
  double psi = objective(lambda, e);
  for (out.iterations = 0; out.iterations < kMaxNewton; ++out.iterations) {
    const Eigen::VectorXd g = m.transpose() * e - b;
    const double gnorm = g.lpNorm<Eigen::Infinity>();
    if (gnorm <= gtol) {
      out.converged = true;
      break;
    }
    const Eigen::MatrixXd h = m.transpose() * e.asDiagonal() * m;
    Eigen::VectorXd d = -h.completeOrthogonalDecomposition().solve(g);
    if (!d.allFinite() || g.dot(d) >= 0) d = -g;

    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 80; ++k, t *= 0.5) {
      const Eigen::VectorXd trial = lambda + t * d;
      const double psi_new = objective(trial, e_new);
      if (!std::isfinite(psi_new)) continue;
      const double g_new = (m.transpose() * e_new - b).lpNorm<Eigen::Infinity>();
      if (psi_new <= psi + 1e-4 * t * g.dot(d) || g_new < 0.5 * gnorm) {
        lambda = trial;
        psi = psi_new;
        e = e_new;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  out.lambda = std::move(lambda);
  return out;
}

void require_finite_nonneg(const Eigen::VectorXd& v, const char* what, bool strict) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (!std::isfinite(v(i)) || v(i) < 0 || (strict && v(i) == 0))
      throw ValidationError(std::string(what) + (strict ? " must be strictly positive" : " must be nonnegative"));
}

// The face of {x >= 0 | Sx = Sx0} that contains its relative interior.
struct Face {
  std::vector<Eigen::Index> free;
  Eigen::MatrixXd basis;  ///< orthonormal basis of the row space of S restricted to `free`
  Eigen::MatrixXd s;
};

Face feasible_face(const intlat::IntMatrix& s_int, const Eigen::VectorXd& x0) {
  Face face;
  face.s = to_real(s_int);
  const Eigen::Index n = x0.size();
  const Eigen::VectorXd b = face.s * x0;
  const double scale = 1.0 + x0.lpNorm<Eigen::Infinity>();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (x0(j) > 0 || face.s.rows() == 0) {
      face.free.push_back(j);
      continue;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    c(j) = -1.0;
    const lp::Result r = lp::minimize(face.s, b, c);
    if (r.status == lp::Status::infeasible) throw MathError("E-projection: feasible polytope reported empty");
    if (r.status == lp::Status::unbounded || -r.objective > 1e-9 * scale) face.free.push_back(j);
  }
  Eigen::MatrixXd sf(face.s.rows(), static_cast<Eigen::Index>(face.free.size()));
  for (std::size_t k = 0; k < face.free.size(); ++k) sf.col(static_cast<Eigen::Index>(k)) = face.s.col(face.free[k]);
  face.basis = column_basis(sf.transpose());
  return face;
}

struct EStep {
  ProjectionResult result;
  Eigen::VectorXd lambda;
};

EStep e_project_on_face(const Face& face, const Eigen::VectorXd& y, const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& lambda0) {
  const auto k = static_cast<Eigen::Index>(face.free.size());
  Eigen::VectorXd yf(k), xf0(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    yf(i) = y(face.free[static_cast<std::size_t>(i)]);
    xf0(i) = x0(face.free[static_cast<std::size_t>(i)]);
  }
  const Eigen::MatrixXd& q = face.basis;
  const Eigen::VectorXd b = q.transpose() * xf0;
  const double gtol = 1e-13 * (1.0 + xf0.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd start = lambda0.size() == q.cols() ? lambda0 : Eigen::VectorXd::Zero(q.cols());
  DualSolution dual = dual_newton(yf, q, b, start, gtol);

  EStep out;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(x0.size());
  const Eigen::VectorXd xf = (yf.array() * (q * dual.lambda).array().exp()).matrix();
  for (Eigen::Index i = 0; i < k; ++i) x(face.free[static_cast<std::size_t>(i)]) = xf(i);

  const Eigen::VectorXd log_ratio = (xf.array() / yf.array()).log().matrix();
  const double feasibility = face.s.rows() ? (face.s * (x - x0)).lpNorm<Eigen::Infinity>() : 0.0;
  const double normal = k ? (log_ratio - q * (q.transpose() * log_ratio)).lpNorm<Eigen::Infinity>() : 0.0;
  out.result.point = x;
  out.result.objective = relative_entropy(x, y);
  out.result.iterations = dual.iterations;
  out.result.kkt_residual = feasibility + normal;
  out.result.converged = dual.converged;
  out.lambda = std::move(dual.lambda);
  return out;
}

ProjectionResult m_project_impl(const Eigen::VectorXd& x, const Eigen::MatrixXd& a, const Eigen::VectorXd& c,
                                const Eigen::VectorXd& log_theta0) {
  const Eigen::VectorXd moments = a * x;
  const double scale = std::max(1.0, moments.lpNorm<Eigen::Infinity>());
  DualSolution dual = dual_newton(c, a.transpose(), moments, log_theta0, 1e-13 * scale);
  ProjectionResult out;
  out.point = dual.lambda.array().exp().matrix();
  out.image = (c.array() * (a.transpose() * dual.lambda).array().exp()).matrix();
  out.objective = relative_entropy(x, out.image);
  out.iterations = dual.iterations;
  out.kkt_residual = (a * (x - out.image)).lpNorm<Eigen::Infinity>() / scale;
  out.converged = dual.converged && out.point.allFinite() && (out.point.array() > 0).all();
  return out;
}

}  // namespace

DivergenceValue relative_entropy(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size()) throw ValidationError("relative entropy: length mismatch");
  require_finite_nonneg(x, "relative entropy: x", false);
  require_finite_nonneg(y, "relative entropy: y", false);
  DivergenceValue out;
  for (Eigen::Index i = 0; i < x.size(); ++i) out.value += entropy_term(x(i), y(i));
  out.finite = std::isfinite(out.value);
  if (out.finite) out.value = std::max(out.value, 0.0);
  return out;
}

PythagoreanTerms pythagorean_check(const Eigen::VectorXd& p, const Eigen::VectorXd& q, const Eigen::VectorXd& r) {
  if (p.size() != q.size() || q.size() != r.size()) throw ValidationError("pythagorean check: length mismatch");
  require_finite_nonneg(p, "pythagorean check: P", true);
  require_finite_nonneg(q, "pythagorean check: Q", true);
  require_finite_nonneg(r, "pythagorean check: R", true);
  PythagoreanTerms out;
  out.orthogonality = (p - q).dot((q.array().log() - r.array().log()).matrix());
  out.identity_gap = relative_entropy(p, q).value + relative_entropy(q, r).value - relative_entropy(p, r).value;
  return out;
}

ProjectionResult birch_point(const Eigen::VectorXd& alpha, const Eigen::MatrixXd& v,
                             const std::optional<Eigen::VectorXd>& v0, const std::optional<Eigen::VectorXd>& start) {
  const Eigen::Index n = alpha.size();
  require_finite_nonneg(alpha, "Birch point: alpha", true);
  if (v.rows() != n) throw ValidationError("Birch point: V must have one row per entry of alpha");
  const Eigen::VectorXd offset = v0 ? *v0 : Eigen::VectorXd::Zero(n);
  if (offset.size() != n) throw ValidationError("Birch point: offset has the wrong length");

  const Eigen::MatrixXd q = column_basis(v);
  const Eigen::VectorXd w = offset.array().exp().matrix();
  Eigen::VectorXd lambda0 = Eigen::VectorXd::Zero(q.cols());
  if (start) {
    if (start->size() != v.cols()) throw ValidationError("Birch point: start must have one entry per column of V");
    lambda0 = q.transpose() * (v * *start);
  }
  const double gtol = 1e-13 * (1.0 + alpha.lpNorm<Eigen::Infinity>());
  DualSolution dual = dual_newton(w, q, q.transpose() * alpha, lambda0, gtol);

  ProjectionResult out;
  out.point = (w.array() * (q * dual.lambda).array().exp()).matrix();
  const Eigen::VectorXd log_part = out.point.array().log().matrix() - offset;
  out.kkt_residual = (q.transpose() * (out.point - alpha)).norm() + (log_part - q * (q.transpose() * log_part)).norm();
  out.objective = relative_entropy(alpha, out.point);
  out.iterations = dual.iterations;
  out.converged = dual.converged;
  return out;
}

ProjectionResult e_project_oracle(const Eigen::VectorXd& y, const intlat::IntMatrix& s, const Eigen::VectorXd& x0) {
  if (y.size() != x0.size() || s.cols() != static_cast<std::size_t>(y.size()))
    throw ValidationError("E-projection: S, y and x0 sizes disagree");
  require_finite_nonneg(y, "E-projection: y", true);
  require_finite_nonneg(x0, "E-projection: x0", false);
  const Face face = feasible_face(s, x0);
  return e_project_on_face(face, y, x0, {}).result;
}

ProjectionResult m_project_oracle(const Eigen::VectorXd& x, const intlat::IntMatrix& a, const Eigen::VectorXd& c,
                                  const std::optional<Eigen::VectorXd>& theta_start) {
  if (a.cols() != static_cast<std::size_t>(x.size()) || c.size() != x.size())
    throw ValidationError("M-projection: A, c and x sizes disagree");
  require_finite_nonneg(x, "M-projection: x", true);
  require_finite_nonneg(c, "M-projection: c", true);
  Eigen::VectorXd log_theta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(a.rows()));
  if (theta_start) {
    if (theta_start->size() != log_theta.size()) throw ValidationError("M-projection: start has the wrong length");
    require_finite_nonneg(*theta_start, "M-projection: start", true);
    log_theta = theta_start->array().log().matrix();
  }
  return m_project_impl(x, to_real(a), c, log_theta);
}

EMResult em_alternating_oracle(const schemes::ModelSpec& spec, const std::optional<Eigen::VectorXd>& theta_start,
                               std::size_t max_rounds) {
  spec.validate();
  const Eigen::VectorXd x0 = Eigen::Map<const Eigen::VectorXd>(spec.x0.data(), static_cast<Eigen::Index>(spec.n));
  const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(spec.c.data(), static_cast<Eigen::Index>(spec.n));
  Eigen::VectorXd theta =
      theta_start ? *theta_start
                  : Eigen::Map<const Eigen::VectorXd>(spec.theta0.data(), static_cast<Eigen::Index>(spec.m)).eval();
  if (theta.size() != static_cast<Eigen::Index>(spec.m)) throw ValidationError("EM: start has the wrong length");
  require_finite_nonneg(theta, "EM: start", true);

  const Eigen::MatrixXd a = to_real(spec.A);
  const Face face = feasible_face(spec.S, x0);
  EMResult out;
  Eigen::VectorXd lambda, x = x0;
  for (out.rounds = 1; out.rounds <= max_rounds; ++out.rounds) {
    const Eigen::VectorXd y = (c.array() * (a.transpose() * theta.array().log().matrix()).array().exp()).matrix();
    EStep e = e_project_on_face(face, y, x0, lambda);
    lambda = std::move(e.lambda);
    const ProjectionResult m = m_project_impl(e.result.point, a, c, theta.array().log().matrix());
    const double moved = std::max((e.result.point - x).lpNorm<Eigen::Infinity>(), (m.point - theta).lpNorm<Eigen::Infinity>());
    x = e.result.point;
    theta = m.point;
    if (!theta.allFinite()) break;
    if (moved < 1e-10) {
      out.converged = true;
      break;
    }
  }
  out.rounds = std::min(out.rounds, max_rounds);
  out.x = x;
  out.theta = theta;
  const Eigen::VectorXd y = (c.array() * (a.transpose() * theta.array().log().matrix()).array().exp()).matrix();
  out.objective = relative_entropy(x, y);
  return out;
}

double die_log_likelihood(unsigned s1, unsigned s2, double p) {
  if (s2 > s1) throw ValidationError("die likelihood: need s2 <= s1");
  const double inf = std::numeric_limits<double>::infinity();
  auto log_power = [&](double base, double k) { return k == 0 ? 0.0 : (base == 0 ? -inf : k * std::log(base)); };
  const double log_norm = std::lgamma(s1 + 1.0) - std::lgamma(s1 - s2 + 1.0);
  std::vector<double> terms;
  double top = -inf;
  for (unsigned i = 0; i <= s2; ++i) {
    const double t = log_norm - std::lgamma(i + 1.0) - std::lgamma(s2 - i + 1.0) + log_power(p, s2 + i) +
                     log_power(1 - p, 2.0 * s1 - s2 - i);
    terms.push_back(t);
    top = std::max(top, t);
  }
  if (top == -inf) return -inf;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - top);
  return top + std::log(sum) - s1 * std::log(1 - p + p * p);
}

Eigen::Vector2d die_mle_brute_force(unsigned s1, unsigned s2) {
  if (s2 > s1) throw ValidationError("die MLE: need s2 <= s1");
  // d/dp log L, as a weighted average of the per-term derivatives
  auto slope = [&](double p) {
    const double inf = std::numeric_limits<double>::infinity();
    const double log_norm = std::lgamma(s1 + 1.0) - std::lgamma(s1 - s2 + 1.0);
    std::vector<double> logs, grads;
    double top = -inf;
    for (unsigned i = 0; i <= s2; ++i) {
      const double k1 = s2 + i, k2 = 2.0 * s1 - s2 - i;
      if ((p == 0 && k1 > 0) || (p == 1 && k2 > 0)) continue;
      const double t = log_norm - std::lgamma(i + 1.0) - std::lgamma(s2 - i + 1.0) +
                       (k1 ? k1 * std::log(p) : 0.0) + (k2 ? k2 * std::log(1 - p) : 0.0);
      logs.push_back(t);
      grads.push_back((k1 ? k1 / p : 0.0) - (k2 ? k2 / (1 - p) : 0.0));
      top = std::max(top, t);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < logs.size(); ++k) {
      const double wk = std::exp(logs[k] - top);
      num += wk * grads[k];
      den += wk;
    }
    return num / den - s1 * (2 * p - 1) / (1 - p + p * p);
  };

  double p = 0.5, step = 0.01, value = die_log_likelihood(s1, s2, p);
  for (int iter = 0; iter < 100000 && step > 1e-18; ++iter) {
    const double g = slope(p);
    const double trial = std::clamp(p + step * g, 0.0, 1.0);
    if (trial == p) break;
    const double trial_value = die_log_likelihood(s1, s2, trial);
    if (trial_value >= value + 1e-4 * g * (trial - p)) {
      p = trial;
      value = trial_value;
      step *= 2;
    } else {
      step *= 0.5;
    }
  }
  return {p, 1 - p};
}

}  // namespace crnem::infogeo
