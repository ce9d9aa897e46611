#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "crnem/intlat.hpp"
#include "crnem/schemes.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v(i++) = x;
  return v;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<std::vector<long>> to_long(const crnem::intlat::IntMatrix& m) {
  std::vector<std::vector<long>> out(m.rows(), std::vector<long>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c).get_si();
  return out;
}

inline crnem::intlat::IntMatrix random_int_matrix(Rng& rng, std::size_t rows, std::size_t cols, long lo, long hi) {
  std::uniform_int_distribution<long> pick(lo, hi);
  crnem::intlat::IntMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = pick(rng);
  return m;
}

// Laplace expansion on machine integers; only for tiny matrices.
inline long small_det(const std::vector<std::vector<long>>& m) {
  const std::size_t n = m.size();
  if (n == 0) return 1;
  if (n == 1) return m[0][0];
  long total = 0;
  for (std::size_t c = 0; c < n; ++c) {
    std::vector<std::vector<long>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<long> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(m[r][k]);
      minor.push_back(row);
    }
    const long term = m[0][c] * small_det(minor);
    total += (c % 2 == 0) ? term : -term;
  }
  return total;
}

// A full-rank r x n integer matrix generates a saturated lattice iff the gcd
// of its r x r minors is 1.
inline long maximal_minor_gcd(const std::vector<std::vector<long>>& rows) {
  const std::size_t r = rows.size();
  if (r == 0) return 1;
  const std::size_t n = rows[0].size();
  long g = 0;
  std::vector<std::size_t> pick(r);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    std::vector<std::vector<long>> sq(r, std::vector<long>(r));
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) sq[i][j] = rows[i][pick[j]];
    g = std::gcd(g, std::abs(small_det(sq)));
    std::size_t i = r;
    while (i > 0 && pick[i - 1] == n - r + i - 1) --i;
    if (i == 0) break;
    ++pick[i - 1];
    for (std::size_t j = i; j < r; ++j) pick[j] = pick[j - 1] + 1;
  }
  return g;
}

// Rank over the rationals by floating elimination with full pivoting; fine
// for the small integer matrices used in tests.
inline std::size_t real_rank(const std::vector<std::vector<long>>& rows, std::size_t cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  if (m.size() == 0) return 0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
  lu.setThreshold(1e-9);
  return static_cast<std::size_t>(lu.rank());
}

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).lpNorm<Eigen::Infinity>();
}

// Random model with A in {0,1,2}^{m x n} (no zero column), S with entries in
// {-1,0,1} and a nontrivial kernel, and positive data.
inline crnem::schemes::ModelSpec random_model(Rng& rng, std::size_t n, std::size_t m) {
  std::uniform_real_distribution<double> pos(0.3, 2.0);
  crnem::schemes::ModelSpec spec;
  spec.n = n;
  spec.m = m;
  do {
    spec.A = random_int_matrix(rng, m, n, 0, 2);
    bool zero_col = false;
    for (std::size_t j = 0; j < n; ++j) {
      bool zero = true;
      for (std::size_t i = 0; i < m; ++i) zero = zero && spec.A(i, j) == 0;
      zero_col = zero_col || zero;
    }
    if (!zero_col) break;
  } while (true);
  const std::size_t rows = 1 + rng() % (n - 1);
  spec.S = random_int_matrix(rng, rows, n, -1, 1);
  for (std::size_t j = 0; j < n; ++j) {
    spec.c.push_back(pos(rng));
    spec.x0.push_back(pos(rng));
  }
  for (std::size_t i = 0; i < m; ++i) spec.theta0.push_back(pos(rng));
  return spec;
}

}  // namespace testing
