#include <doctest.h>

#include <cmath>
#include <limits>

#include "crnem/error.hpp"
#include "crnem/infogeo.hpp"
#include "support.hpp"

using namespace crnem;
using namespace crnem::infogeo;
using testing::vec;

namespace {

double log_mixture_likelihood(unsigned s1, unsigned s2, long double p) {
  // multinomial(s1; i, s2-i, s1-s2) p^(s2+i) (1-p)^(2 s1 - s2 - i) / (1 - p + p²)^s1
  long double total = 0;
  for (unsigned i = 0; i <= s2; ++i) {
    long double coef = 1;
    for (unsigned k = 1; k <= s1; ++k) coef *= k;
    for (unsigned k = 1; k <= i; ++k) coef /= k;
    for (unsigned k = 1; k <= s2 - i; ++k) coef /= k;
    for (unsigned k = 1; k <= s1 - s2; ++k) coef /= k;
    total += coef * std::pow(p, static_cast<long double>(s2 + i)) *
             std::pow(1 - p, static_cast<long double>(2 * s1 - s2 - i));
  }
  return static_cast<double>(std::log(total) - s1 * std::log(1 - p + p * p));
}

double grid_argmax(unsigned s1, unsigned s2, double step) {
  double best = 0, best_value = -std::numeric_limits<double>::infinity();
  for (double p = 0; p <= 1 + 1e-12; p += step) {
    const double v = log_mixture_likelihood(s1, s2, std::min(p, 1.0));
    if (v > best_value) best_value = v, best = p;
  }
  return best;
}

Eigen::VectorXd random_positive(testing::Rng& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

double divergence(const Eigen::VectorXd& x, const Eigen::VectorXd& y) { return relative_entropy(x, y).value; }

// Minimizes D(x‖y) over {x >= 0 : s·x = s·x0} for one positive row s in R³
// by repeatedly zooming a grid around the best point.
Eigen::Vector3d grid_eprojection(const Eigen::Vector3d& y, const Eigen::Vector3d& s, double total) {
  double lo1 = 0, hi1 = total / s(0), lo2 = 0, hi2 = total / s(1);
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  for (int level = 0; level < 12; ++level) {
    double best_value = std::numeric_limits<double>::infinity();
    const int cells = 60;
    for (int a = 0; a <= cells; ++a)
      for (int b = 0; b <= cells; ++b) {
        const double x1 = lo1 + (hi1 - lo1) * a / cells, x2 = lo2 + (hi2 - lo2) * b / cells;
        const double x3 = (total - s(0) * x1 - s(1) * x2) / s(2);
        if (x1 < 0 || x2 < 0 || x3 < 0) continue;
        const Eigen::Vector3d x(x1, x2, x3);
        const double v = divergence(x, y);
        if (v < best_value) best_value = v, best = x;
      }
    const double w1 = (hi1 - lo1) / 8, w2 = (hi2 - lo2) / 8;
    lo1 = std::max(0.0, best(0) - w1), hi1 = best(0) + w1;
    lo2 = std::max(0.0, best(1) - w2), hi2 = best(1) + w2;
  }
  return best;
}

// Plain gradient descent in log θ on Σ y_A(θ) - x·log y_A(θ).
Eigen::VectorXd gradient_descent_mprojection(const Eigen::VectorXd& x, const Eigen::MatrixXd& a,
                                             const Eigen::VectorXd& c, Eigen::VectorXd u) {
  auto objective = [&](const Eigen::VectorXd& w) {
    const Eigen::VectorXd logy = c.array().log().matrix() + a.transpose() * w;
    return logy.array().exp().sum() - x.dot(logy);
  };
  double step = 1e-2;
  for (int iter = 0; iter < 200000; ++iter) {
    const Eigen::VectorXd y = (c.array().log().matrix() + a.transpose() * u).array().exp().matrix();
    const Eigen::VectorXd g = a * (y - x);
    if (g.norm() < 1e-12 * (1 + (a * x).norm())) break;
    const double f0 = objective(u);
    while (objective(u - step * g) > f0 - 0.5 * step * g.squaredNorm()) step *= 0.5;
    u -= step * g;
    step *= 1.5;
  }
  return u.array().exp().matrix();
}

}  // namespace

TEST_CASE("relative entropy examples") {
  CHECK(divergence(vec({0.5, 2, 0}), vec({0.5, 2, 0})) == 0.0);
  CHECK(divergence(vec({2}), vec({1})) == doctest::Approx(2 * std::log(2.0) - 1).epsilon(1e-15));
  CHECK(divergence(vec({0}), vec({3})) == 3.0);
  const auto inf = relative_entropy(vec({1}), vec({0}));
  CHECK_FALSE(inf.finite);
  CHECK(std::isinf(inf.value));
  CHECK(relative_entropy(vec({0}), vec({0})).value == 0.0);
  CHECK_THROWS_AS(relative_entropy(vec({1, 2}), vec({1})), ValidationError);
}

TEST_CASE("relative entropy is nonnegative and vanishes only on the diagonal") {
  testing::Rng rng(3);
  for (int k = 0; k < 500; ++k) {
    const Eigen::VectorXd x = random_positive(rng, 4, 0, 3), y = random_positive(rng, 4, 0.01, 3);
    const double d = divergence(x, y);
    CHECK(d >= 0);
    if (d == 0) CHECK((x - y).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(divergence(x, x) == 0.0);
  }
}

TEST_CASE("Poisson divergence equals the rate divergence") {
  for (double lambda : {0.5, 1.0, 2.0, 5.0})
    for (double mu : {0.5, 1.0, 2.0, 5.0}) {
      double sum = 0, mass = 0, log_p = -lambda, log_q = -mu;
      for (int k = 0; 1 - mass > 1e-14 || k < 5; ++k) {
        if (k > 0) {
          log_p += std::log(lambda) - std::log(k);
          log_q += std::log(mu) - std::log(k);
        }
        const double p = std::exp(log_p);
        sum += p * (log_p - log_q);
        mass += p;
      }
      CHECK(sum == doctest::Approx(divergence(vec({lambda}), vec({mu}))).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("Pythagorean terms") {
  const Eigen::VectorXd p = vec({1, 2, 3});
  const auto same = pythagorean_check(p, p, vec({4, 1, 2}));
  CHECK(std::abs(same.orthogonality) < 1e-15);
  CHECK(std::abs(same.identity_gap) < 1e-14);

  testing::Rng rng(9);
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd pp = random_positive(rng, 5, 0.1, 3), q = random_positive(rng, 5, 0.1, 3);
    Eigen::VectorXd v = random_positive(rng, 5, -1, 1);
    const Eigen::VectorXd diff = pp - q;
    v -= diff * (diff.dot(v) / diff.squaredNorm());
    const Eigen::VectorXd r = (q.array() * v.array().exp()).matrix();
    CHECK(std::abs(pythagorean_check(pp, q, r).identity_gap) < 1e-12);

    const Eigen::VectorXd generic = random_positive(rng, 5, 0.1, 3);
    const auto t = pythagorean_check(pp, q, generic);
    CHECK(std::abs(t.identity_gap + t.orthogonality) < 1e-12);
  }
  CHECK_THROWS_AS(pythagorean_check(vec({1, 0}), vec({1, 1}), vec({1, 1})), ValidationError);
}

TEST_CASE("Birch point examples") {
  Eigen::MatrixXd v(3, 2);
  v << 1, 1, 1, 1, 1, 0;
  const auto die = birch_point(vec({2, 20, 27}), v);
  CHECK(die.converged);
  CHECK(testing::max_abs_diff(die.point, vec({11, 11, 27})) < 1e-9);
  CHECK(die.kkt_residual < 1e-10);

  const Eigen::VectorXd alpha = vec({0.3, 4, 1.5, 2});
  const auto full = birch_point(alpha, Eigen::MatrixXd::Identity(4, 4));
  CHECK(testing::max_abs_diff(full.point, alpha) < 1e-10);
  const auto none = birch_point(alpha, Eigen::MatrixXd(4, 0));
  CHECK(testing::max_abs_diff(none.point, Eigen::VectorXd::Ones(4)) < 1e-14);
}

TEST_CASE("Birch point: Pythagorean decomposition and uniqueness") {
  testing::Rng rng(21);
  std::normal_distribution<double> normal(0, 1);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index n = 3 + trial % 4, d = 1 + trial % (n - 1);
    Eigen::MatrixXd v(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < d; ++j) v(i, j) = normal(rng);
    const Eigen::VectorXd alpha = random_positive(rng, n, 0.1, 5);
    const auto star = birch_point(alpha, v);
    REQUIRE(star.converged);
    CHECK(star.kkt_residual < 1e-10);
    // α* - α ⊥ V and log α* ∈ V
    CHECK((v.transpose() * (star.point - alpha)).norm() < 1e-10);
    const Eigen::VectorXd logs = star.point.array().log().matrix();
    CHECK((logs - v * v.colPivHouseholderQr().solve(logs)).norm() < 1e-10);

    for (int k = 0; k < 5; ++k) {
      Eigen::VectorXd w(d);
      for (Eigen::Index j = 0; j < d; ++j) w(j) = 0.5 * normal(rng);
      const Eigen::VectorXd beta = (v * w).array().exp().matrix();
      const double lhs = divergence(alpha, beta), rhs = divergence(alpha, star.point) + divergence(star.point, beta);
      CHECK(std::abs(lhs - rhs) < 1e-10 * (1 + lhs));
    }
    for (int k = 0; k < 20; ++k) {
      Eigen::VectorXd start(d);
      for (Eigen::Index j = 0; j < d; ++j) start(j) = 2 * normal(rng);
      const auto again = birch_point(alpha, v, std::nullopt, start);
      CHECK(testing::max_abs_diff(again.point, star.point) < 1e-8);
    }
  }
}

TEST_CASE("E-projection oracle") {
  const intlat::IntMatrix s{{1, 1, 1}, {1, 1, 0}};
  const auto die = e_project_oracle(vec({1. / 3, 1. / 3, 1. / 3}), s, vec({2, 20, 27}));
  CHECK(die.converged);
  CHECK(testing::max_abs_diff(die.point, vec({11, 11, 27})) < 1e-8);
  CHECK(die.kkt_residual < 1e-9);

  const Eigen::VectorXd y = vec({0.7, 1.2, 3});
  CHECK(testing::max_abs_diff(e_project_oracle(y, s, y).point, y) < 1e-12);

  testing::Rng rng(4);
  std::uniform_int_distribution<int> weight(1, 3);
  for (int trial = 0; trial < 15; ++trial) {
    const intlat::IntMatrix row{{weight(rng), weight(rng), weight(rng)}};
    const Eigen::Vector3d sv(row(0, 0).get_d(), row(0, 1).get_d(), row(0, 2).get_d());
    const Eigen::Vector3d yy = random_positive(rng, 3, 0.2, 3);
    const Eigen::Vector3d x0 = random_positive(rng, 3, 0, 2);
    const auto oracle = e_project_oracle(yy, row, x0);
    CHECK(oracle.kkt_residual < 1e-9);
    CHECK(testing::max_abs_diff(oracle.point, grid_eprojection(yy, sv, sv.dot(x0))) < 1e-4);
  }
}

TEST_CASE("E-projection onto a face of the polytope") {
  // x1 - x2 = 0 and x1 + x2 + x3 = 1 with x1 = x2 = 0 forced by x0
  const intlat::IntMatrix s{{1, -1, 0}, {1, 1, 1}};
  const auto r = e_project_oracle(vec({1, 1, 1}), s, vec({0.5, 0.5, 0}));
  CHECK(testing::max_abs_diff(r.point, vec({1. / 3, 1. / 3, 1. / 3})) < 1e-9);
  const intlat::IntMatrix pin{{1, 0, 0}, {0, 1, 1}};
  const auto face = e_project_oracle(vec({1, 1, 1}), pin, vec({0, 1, 1}));
  CHECK(face.point(0) == 0.0);
  CHECK(testing::max_abs_diff(face.point, vec({0, 1, 1})) < 1e-9);
}

TEST_CASE("M-projection oracle") {
  const intlat::IntMatrix a{{2, 1, 0}, {0, 1, 2}};
  const auto die = m_project_oracle(vec({11, 11, 27}), a, vec({1, 1, 1}));
  CHECK(die.converged);
  CHECK(testing::max_abs_diff(die.point, vec({3, 5})) < 1e-9);
  CHECK(testing::max_abs_diff(die.image, vec({9, 15, 25})) < 1e-8);
  CHECK(die.kkt_residual < 1e-9);

  const auto inside = m_project_oracle(vec({0.25, 0.5, 1}), a, vec({1, 1, 1}));
  CHECK(testing::max_abs_diff(inside.point, vec({0.5, 1})) < 1e-10);
  CHECK(inside.objective.value < 1e-14);

  testing::Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t m = 1 + trial % 3, n = m + 1 + trial % 3;
    const auto spec = testing::random_model(rng, n, m);
    const Eigen::VectorXd x = random_positive(rng, static_cast<Eigen::Index>(n), 0.2, 3);
    const Eigen::VectorXd c = testing::to_eigen(spec.c);
    Eigen::MatrixXd ad(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ad(i, j) = spec.A(i, j).get_d();
    const auto oracle = m_project_oracle(x, spec.A, c);
    REQUIRE(oracle.converged);
    CHECK(oracle.kkt_residual < 1e-9);
    for (int start = 0; start < 3; ++start) {
      const Eigen::VectorXd u0 = random_positive(rng, static_cast<Eigen::Index>(m), -1, 1);
      const Eigen::VectorXd theta = gradient_descent_mprojection(x, ad, c, u0);
      const Eigen::VectorXd image = (c.array().log().matrix() + ad.transpose() * theta.array().log().matrix())
                                        .array()
                                        .exp()
                                        .matrix();
      CHECK(testing::max_abs_diff(image, oracle.image) < 1e-5 * (1 + image.lpNorm<Eigen::Infinity>()));
    }
  }
}

TEST_CASE("alternating EM on the die") {
  const auto r = em_alternating_oracle(schemes::builtin_example("die"));
  CHECK(r.converged);
  CHECK(testing::max_abs_diff(r.x, vec({9, 15, 25})) < 1e-6);
  CHECK(testing::max_abs_diff(r.theta, vec({3, 5})) < 1e-6);

  auto fixed = schemes::builtin_example("die");
  fixed.x0 = {9, 15, 25};
  fixed.theta0 = {3, 5};
  const auto one = em_alternating_oracle(fixed);
  CHECK(one.converged);
  CHECK(one.rounds <= 1);
}

TEST_CASE("alternating EM finds both bistable fixed points") {
  const double c = 0.2;
  const auto spec = schemes::builtin_example("bistable", {c});
  const double root = std::sqrt((1 - 3 * c) * (1 + c)) / 2;
  const double y1 = (1 - c) / 2 + root, y2 = (1 - c) / 2 - root;
  const auto high = em_alternating_oracle(spec, vec({2.0, 0.5}));
  const auto low = em_alternating_oracle(spec, vec({0.5, 2.0}));
  CHECK(testing::max_abs_diff(high.x, vec({y1, c, y2})) < 1e-6);
  CHECK(testing::max_abs_diff(high.theta, vec({std::sqrt(y1), std::sqrt(y2)})) < 1e-6);
  CHECK(testing::max_abs_diff(low.x, vec({y2, c, y1})) < 1e-6);
  CHECK(testing::max_abs_diff(low.theta, vec({std::sqrt(y2), std::sqrt(y1)})) < 1e-6);
}

TEST_CASE("die maximum likelihood direction") {
  const auto d = die_mle_brute_force(49, 24);
  CHECK(d(0) + d(1) == doctest::Approx(1.0));
  CHECK(d(0) == doctest::Approx(0.375).epsilon(1e-3));
  CHECK(std::abs(d(0) / d(1) - 0.6) < 1e-3);
  CHECK(d(0) == doctest::Approx(grid_argmax(49, 24, 1e-4)).epsilon(2e-4));

  CHECK(die_mle_brute_force(10, 0)(0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(grid_argmax(10, 0, 1e-3) == 0.0);

  for (unsigned s : {2u, 6u, 12u}) {
    const double p = die_mle_brute_force(s, s)(0);
    CHECK(std::abs(p - grid_argmax(s, s, 1e-4)) < 2e-4);
  }
  for (double p : {0.1, 0.37, 0.8})
    CHECK(die_log_likelihood(49, 24, p) == doctest::Approx(log_mixture_likelihood(49, 24, p)).epsilon(1e-10));
  CHECK_THROWS_AS(die_mle_brute_force(3, 4), ValidationError);
}
