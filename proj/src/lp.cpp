#include "crnem/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "crnem/error.hpp"

namespace crnem::lp {

namespace {

// Tableau rows 0..m-1 are constraints, last column is the right-hand side.
struct Tableau {
  Eigen::MatrixXd t;
  std::vector<Eigen::Index> basis;

  Eigen::Index rows() const { return t.rows(); }
  Eigen::Index rhs_col() const { return t.cols() - 1; }

  void pivot(Eigen::Index r, Eigen::Index c) {
    t.row(r) /= t(r, c);
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      if (i != r && t(i, c) != 0.0) t.row(i) -= t(i, c) * t.row(r);
    basis[static_cast<std::size_t>(r)] = c;
  }
};

// Minimizes cost over the current tableau restricted to columns < active_cols.
// Returns false when unbounded.
bool run_simplex(Tableau& tab, const Eigen::VectorXd& cost, Eigen::Index active_cols, double tol) {
  const Eigen::Index m = tab.rows();
  for (int iter = 0; iter < 100000; ++iter) {
    // reduced costs
    Eigen::Index entering = -1;
    for (Eigen::Index j = 0; j < active_cols; ++j) {
      double reduced = cost(j);
      for (Eigen::Index i = 0; i < m; ++i) reduced -= cost(tab.basis[static_cast<std::size_t>(i)]) * tab.t(i, j);
      if (reduced < -tol) {
        entering = j;  // Bland: first improving column
        break;
      }
    }
    if (entering < 0) return true;

    Eigen::Index leaving = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = tab.t(i, entering);
      if (a > tol) {
        const double ratio = tab.t(i, tab.rhs_col()) / a;
        if (ratio < best - tol ||
            (std::abs(ratio - best) <= tol && leaving >= 0 &&
             tab.basis[static_cast<std::size_t>(i)] < tab.basis[static_cast<std::size_t>(leaving)])) {
          best = ratio;
          leaving = i;
        }
      }
    }
    if (leaving < 0) return false;
    tab.pivot(leaving, entering);
  }
  throw MathError("simplex iteration limit reached");
}

}  // namespace

Result minimize(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c,
                double tol) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (b.size() != m || c.size() != n) throw ValidationError("lp::minimize: dimension mismatch");

  // Phase 1: artificials on every row, b >= 0.
  Tableau tab;
  tab.t = Eigen::MatrixXd::Zero(m, n + m + 1);
  tab.basis.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sign = b(i) < 0 ? -1.0 : 1.0;
    tab.t.row(i).head(n) = sign * a.row(i);
    tab.t(i, n + i) = 1.0;
    tab.t(i, n + m) = sign * b(i);
    tab.basis[static_cast<std::size_t>(i)] = n + i;
  }
  Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(n + m);
  phase1.tail(m).setOnes();
  run_simplex(tab, phase1, n + m, tol);

  double infeasibility = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    if (tab.basis[static_cast<std::size_t>(i)] >= n) infeasibility += tab.t(i, n + m);
  const double scale = 1.0 + b.cwiseAbs().maxCoeff();
  if (infeasibility > 1e-9 * scale) return Result{Status::infeasible, {}, 0.0};

  // Drive remaining (zero-valued) artificials out of the basis.
  std::vector<bool> redundant(static_cast<std::size_t>(m), false);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis[static_cast<std::size_t>(i)] < n) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < n; ++j)
      if (std::abs(tab.t(i, j)) > tol) {
        col = j;
        break;
      }
    if (col >= 0)
      tab.pivot(i, col);
    else
      redundant[static_cast<std::size_t>(i)] = true;
  }

  // Phase 2 on the original columns; redundant rows keep their artificial at zero.
  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(n + m);
  phase2.head(n) = c;
  for (Eigen::Index i = 0; i < m; ++i)
    if (redundant[static_cast<std::size_t>(i)]) tab.t(i, n + m) = 0.0;
  // Artificial columns are excluded from entering by limiting active columns to n.
  if (!run_simplex(tab, phase2, n, tol)) return Result{Status::unbounded, {}, 0.0};

  Result res;
  res.status = Status::optimal;
  res.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index j = tab.basis[static_cast<std::size_t>(i)];
    if (j < n) res.x(j) = std::max(0.0, tab.t(i, n + m));
  }
  res.objective = c.dot(res.x);
  return res;
}

}  // namespace crnem::lp
