#include "crnem/integrator.hpp"

#include <algorithm>
#include <cmath>

namespace crnem::ode {

namespace {

// Dormand & Prince (1980) tableau; nodes are not needed for autonomous fields.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - b̂ (5th minus embedded 4th order weights)
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double kSafety = 0.9;
constexpr double kBeta = 0.04;
constexpr double kAlpha = 0.2 - kBeta * 0.75;
constexpr double kMinFactor = 0.2;
constexpr double kMaxFactor = 10.0;

}  // namespace

DormandPrince54::DormandPrince54(VectorField f, double rel_tol, double abs_tol)
    : f_(std::move(f)), rel_tol_(rel_tol), abs_tol_(abs_tol) {}

TrialStep DormandPrince54::attempt(const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double h) {
  const Eigen::Index n = y.size();
  k2_.resize(n), k3_.resize(n), k4_.resize(n), k5_.resize(n), k6_.resize(n);

  tmp_ = y + h * a21 * f0;
  f_(tmp_, k2_);
  tmp_ = y + h * (a31 * f0 + a32 * k2_);
  f_(tmp_, k3_);
  tmp_ = y + h * (a41 * f0 + a42 * k2_ + a43 * k3_);
  f_(tmp_, k4_);
  tmp_ = y + h * (a51 * f0 + a52 * k2_ + a53 * k3_ + a54 * k4_);
  f_(tmp_, k5_);
  tmp_ = y + h * (a61 * f0 + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
  f_(tmp_, k6_);

  TrialStep out;
  out.y = y + h * (b1 * f0 + b3 * k3_ + b4 * k4_ + b5 * k5_ + b6 * k6_);
  out.f.resize(n);
  f_(out.y, out.f);

  const Eigen::VectorXd err = h * (e1 * f0 + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * out.f);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = abs_tol_ + rel_tol_ * std::max(std::abs(y(i)), std::abs(out.y(i)));
    const double r = err(i) / sc;
    sum += r * r;
  }
  out.error_norm = n == 0 ? 0.0 : std::sqrt(sum / static_cast<double>(n));
  const double dy = (out.y - tmp_).norm();
  if (dy > 0) out.stiffness = (out.f - k6_).norm() / dy;
  return out;
}

double DormandPrince54::initial_step(const Eigen::VectorXd& y, const Eigen::VectorXd& f0, double h_max) {
  const Eigen::Index n = y.size();
  if (n == 0) return h_max;
  double d0 = 0.0, d1 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = abs_tol_ + rel_tol_ * std::abs(y(i));
    d0 += (y(i) / sc) * (y(i) / sc);
    d1 += (f0(i) / sc) * (f0(i) / sc);
  }
  d0 = std::sqrt(d0 / static_cast<double>(n));
  d1 = std::sqrt(d1 / static_cast<double>(n));
  double h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  h = std::min(h, h_max);

  Eigen::VectorXd y1 = y + h * f0, f1(n);
  f_(y1, f1);
  double d2 = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double sc = abs_tol_ + rel_tol_ * std::abs(y(i));
    const double r = (f1(i) - f0(i)) / sc;
    d2 += r * r;
  }
  d2 = std::sqrt(d2 / static_cast<double>(n)) / h;
  const double dmax = std::max(d1, d2);
  const double h1 = dmax <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / dmax, 0.2);
  return std::min({100.0 * h, h1, h_max});
}

double DormandPrince54::accept_factor(double error_norm) {
  const double err = std::max(error_norm, 1e-10);
  double fac = kSafety * std::pow(err, -kAlpha) * std::pow(previous_error_, kBeta);
  fac = std::clamp(fac, kMinFactor, kMaxFactor);
  previous_error_ = std::max(error_norm, 1e-4);
  return fac;
}

double DormandPrince54::reject_factor(double error_norm) {
  return std::max(kMinFactor, kSafety * std::pow(error_norm, -0.2));
}

}  // namespace crnem::ode
