#include "crnem/intlat.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <utility>

#include "crnem/error.hpp"

namespace crnem::intlat {

IntMatrix::IntMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, Integer(0)) {}

IntMatrix::IntMatrix(std::initializer_list<std::initializer_list<long>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ValidationError("IntMatrix: ragged initializer");
    for (long v : r) data_.emplace_back(v);
  }
}

IntMatrix IntMatrix::identity(std::size_t n) {
  IntMatrix id(n, n);
  for (std::size_t i = 0; i < n; ++i) id(i, i) = 1;
  return id;
}

IntMatrix IntMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  IntMatrix m(rows.size(), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != cols) throw ValidationError("IntMatrix: ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = static_cast<long>(rows[r][c]);
  }
  return m;
}

std::vector<Integer> IntMatrix::row(std::size_t r) const {
  return {data_.begin() + static_cast<std::ptrdiff_t>(r * cols_),
          data_.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols_)};
}

IntMatrix IntMatrix::transpose() const {
  IntMatrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

bool IntMatrix::is_zero() const {
  return std::all_of(data_.begin(), data_.end(), [](const Integer& v) { return v == 0; });
}

void IntMatrix::swap_rows(std::size_t a, std::size_t b) {
  if (a == b) return;
  for (std::size_t c = 0; c < cols_; ++c) std::swap((*this)(a, c), (*this)(b, c));
}

void IntMatrix::swap_cols(std::size_t a, std::size_t b) {
  if (a == b) return;
  for (std::size_t r = 0; r < rows_; ++r) std::swap((*this)(r, a), (*this)(r, b));
}

std::int64_t IntMatrix::at_int64(std::size_t r, std::size_t c) const {
  const Integer& v = (*this)(r, c);
  if (!v.fits_slong_p()) throw OverflowError("integer entry exceeds 64-bit range");
  return static_cast<std::int64_t>(v.get_si());
}

std::vector<std::vector<std::int64_t>> IntMatrix::to_int64() const {
  std::vector<std::vector<std::int64_t>> out(rows_, std::vector<std::int64_t>(cols_));
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) out[r][c] = at_int64(r, c);
  return out;
}

std::string IntMatrix::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t r = 0; r < rows_; ++r) {
    os << (r ? ",[" : "[");
    for (std::size_t c = 0; c < cols_; ++c) os << (c ? "," : "") << (*this)(r, c).get_str();
    os << ']';
  }
  os << ']';
  return os.str();
}

IntMatrix operator*(const IntMatrix& a, const IntMatrix& b) {
  if (a.cols() != b.rows()) throw ValidationError("IntMatrix: dimension mismatch in product");
  IntMatrix p(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) p(i, j) += a(i, k) * b(k, j);
    }
  return p;
}

bool operator==(const IntMatrix& a, const IntMatrix& b) {
  return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

namespace {

struct Bezout {
  Integer g, s, t;  // s*a + t*b = g >= 0
};

Bezout extended_gcd(const Integer& a, const Integer& b) {
  Bezout r;
  mpz_gcdext(r.g.get_mpz_t(), r.s.get_mpz_t(), r.t.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

// Rows (p, q) <- [[s, t], [-b/g, a/g]] * (p, q); determinant 1.
void combine_rows(IntMatrix& m, std::size_t p, std::size_t q, const Integer& s, const Integer& t,
                  const Integer& u, const Integer& v) {
  for (std::size_t c = 0; c < m.cols(); ++c) {
    Integer x = m(p, c), y = m(q, c);
    m(p, c) = s * x + t * y;
    m(q, c) = u * x + v * y;
  }
}

void combine_cols(IntMatrix& m, std::size_t p, std::size_t q, const Integer& s, const Integer& t,
                  const Integer& u, const Integer& v) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    Integer x = m(r, p), y = m(r, q);
    m(r, p) = s * x + t * y;
    m(r, q) = u * x + v * y;
  }
}

void add_row_multiple(IntMatrix& m, std::size_t target, std::size_t source, const Integer& f) {
  for (std::size_t c = 0; c < m.cols(); ++c) m(target, c) += f * m(source, c);
}

void add_col_multiple(IntMatrix& m, std::size_t target, std::size_t source, const Integer& f) {
  for (std::size_t r = 0; r < m.rows(); ++r) m(r, target) += f * m(r, source);
}

void negate_row(IntMatrix& m, std::size_t r) {
  for (std::size_t c = 0; c < m.cols(); ++c) m(r, c) = -m(r, c);
}

void negate_col(IntMatrix& m, std::size_t c) {
  for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = -m(r, c);
}

}  // namespace

HermiteForm hermite_normal_form(const IntMatrix& m) {
  HermiteForm out{m, IntMatrix::identity(m.rows())};
  IntMatrix& h = out.H;
  IntMatrix& u = out.U;
  std::size_t pivot_row = 0;
  for (std::size_t col = 0; col < h.cols() && pivot_row < h.rows(); ++col) {
    for (std::size_t r = pivot_row + 1; r < h.rows(); ++r) {
      if (h(r, col) == 0) continue;
      const Integer a = h(pivot_row, col), b = h(r, col);
      const Bezout bz = extended_gcd(a, b);
      const Integer ua = -b / bz.g, va = a / bz.g;
      combine_rows(h, pivot_row, r, bz.s, bz.t, ua, va);
      combine_rows(u, pivot_row, r, bz.s, bz.t, ua, va);
    }
    if (h(pivot_row, col) == 0) continue;
    if (h(pivot_row, col) < 0) {
      negate_row(h, pivot_row);
      negate_row(u, pivot_row);
    }
    const Integer pivot = h(pivot_row, col);
    for (std::size_t r = 0; r < pivot_row; ++r) {
      Integer q;
      mpz_fdiv_q(q.get_mpz_t(), h(r, col).get_mpz_t(), pivot.get_mpz_t());
      if (q == 0) continue;
      add_row_multiple(h, r, pivot_row, -q);
      add_row_multiple(u, r, pivot_row, -q);
    }
    ++pivot_row;
  }
  return out;
}

SmithForm smith_normal_form(const IntMatrix& m) {
  IntMatrix d = m;
  IntMatrix u = IntMatrix::identity(m.rows());
  IntMatrix v = IntMatrix::identity(m.cols());
  const std::size_t k = std::min(m.rows(), m.cols());

  for (std::size_t t = 0; t < k; ++t) {
    // smallest nonzero entry of the trailing block becomes the pivot
    bool found = false;
    std::size_t pr = t, pc = t;
    for (std::size_t r = t; r < d.rows(); ++r)
      for (std::size_t c = t; c < d.cols(); ++c)
        if (d(r, c) != 0 && (!found || abs(d(r, c)) < abs(d(pr, pc)))) {
          found = true;
          pr = r;
          pc = c;
        }
    if (!found) break;
    d.swap_rows(t, pr);
    u.swap_rows(t, pr);
    d.swap_cols(t, pc);
    v.swap_cols(t, pc);

    for (;;) {
      for (std::size_t r = t + 1; r < d.rows(); ++r) {
        if (d(r, t) == 0) continue;
        const Integer a = d(t, t), b = d(r, t);
        if (b % a == 0) {
          const Integer f = -(b / a);
          add_row_multiple(d, r, t, f);
          add_row_multiple(u, r, t, f);
          continue;
        }
        const Bezout bz = extended_gcd(a, b);
        const Integer ua = -b / bz.g, va = a / bz.g;
        combine_rows(d, t, r, bz.s, bz.t, ua, va);
        combine_rows(u, t, r, bz.s, bz.t, ua, va);
      }
      for (std::size_t c = t + 1; c < d.cols(); ++c) {
        if (d(t, c) == 0) continue;
        const Integer a = d(t, t), b = d(t, c);
        if (b % a == 0) {
          const Integer f = -(b / a);
          add_col_multiple(d, c, t, f);
          add_col_multiple(v, c, t, f);
          continue;
        }
        const Bezout bz = extended_gcd(a, b);
        const Integer ua = -b / bz.g, va = a / bz.g;
        combine_cols(d, t, c, bz.s, bz.t, ua, va);
        combine_cols(v, t, c, bz.s, bz.t, ua, va);
      }
      bool clear = true;
      for (std::size_t r = t + 1; r < d.rows() && clear; ++r) clear = d(r, t) == 0;
      if (!clear) continue;

      // divisibility d(t,t) | every entry of the trailing block
      bool divides = true;
      for (std::size_t r = t + 1; r < d.rows() && divides; ++r)
        for (std::size_t c = t + 1; c < d.cols(); ++c)
          if (d(r, c) % d(t, t) != 0) {
            add_row_multiple(d, t, r, Integer(1));
            add_row_multiple(u, t, r, Integer(1));
            divides = false;
            break;
          }
      if (divides) break;
    }
    if (d(t, t) < 0) {
      negate_col(d, t);
      negate_col(v, t);
    }
  }

  SmithForm out;
  out.diagonal.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.diagonal.push_back(d(i, i));
  out.U = std::move(u);
  out.V = std::move(v);
  return out;
}

Integer determinant(const IntMatrix& m) {
  if (m.rows() != m.cols()) throw ValidationError("determinant of non-square matrix");
  const std::size_t n = m.rows();
  if (n == 0) return 1;
  IntMatrix a = m;
  Integer sign = 1, prev = 1;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    if (a(k, k) == 0) {
      std::size_t swap = k + 1;
      while (swap < n && a(swap, k) == 0) ++swap;
      if (swap == n) return 0;
      a.swap_rows(k, swap);
      sign = -sign;
    }
    for (std::size_t i = k + 1; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j)
        a(i, j) = (a(i, j) * a(k, k) - a(i, k) * a(k, j)) / prev;
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

std::size_t rank(const IntMatrix& m) {
  const IntMatrix h = hermite_normal_form(m).H;
  std::size_t r = 0;
  for (std::size_t i = 0; i < h.rows(); ++i) {
    bool nonzero = false;
    for (std::size_t c = 0; c < h.cols() && !nonzero; ++c) nonzero = h(i, c) != 0;
    if (nonzero) ++r;
  }
  return r;
}

LatticeBasis::LatticeBasis(std::size_t ambient_dim) : ambient_dim_(ambient_dim), vectors_(0, ambient_dim) {}

LatticeBasis::LatticeBasis(std::size_t ambient_dim, IntMatrix vectors)
    : ambient_dim_(ambient_dim), vectors_(std::move(vectors)) {
  if (vectors_.rows() == 0) {
    vectors_ = IntMatrix(0, ambient_dim_);
    return;
  }
  if (vectors_.cols() != ambient_dim_)
    throw ValidationError("lattice basis vectors have wrong dimension");
  for (std::size_t l = 0; l < vectors_.rows(); ++l) {
    bool nonzero = false;
    for (std::size_t c = 0; c < ambient_dim_ && !nonzero; ++c) nonzero = vectors_(l, c) != 0;
    if (!nonzero) throw ValidationError("lattice basis contains a zero vector");
  }
  if (rank(vectors_) != vectors_.rows())
    throw ValidationError("lattice basis vectors are linearly dependent");
}

LatticeBasis LatticeBasis::from_vectors(const std::vector<std::vector<std::int64_t>>& vectors) {
  if (vectors.empty()) throw ValidationError("from_vectors: ambient dimension unknown for empty set");
  return LatticeBasis(vectors.front().size(), IntMatrix::from_rows(vectors));
}

LatticeBasis integer_kernel_basis(const IntMatrix& s) {
  const std::size_t n = s.cols();
  if (n == 0) throw ValidationError("integer_kernel_basis: matrix has no columns");
  // U * S^T = H; the rows of U opposite zero rows of H span the integer
  // left kernel of S^T, which is ker(S) ∩ Z^n.
  const HermiteForm hf = hermite_normal_form(s.transpose());
  std::vector<std::size_t> kernel_rows;
  for (std::size_t r = 0; r < hf.H.rows(); ++r) {
    bool zero = true;
    for (std::size_t c = 0; c < hf.H.cols() && zero; ++c) zero = hf.H(r, c) == 0;
    if (zero) kernel_rows.push_back(r);
  }
  if (kernel_rows.empty()) return LatticeBasis(n);

  IntMatrix k(kernel_rows.size(), n);
  for (std::size_t i = 0; i < kernel_rows.size(); ++i)
    for (std::size_t c = 0; c < n; ++c) k(i, c) = hf.U(kernel_rows[i], c);

  const IntMatrix canonical = hermite_normal_form(k).H;
  LatticeBasis basis(n, canonical);
  if (!is_saturated(basis)) throw MathError("kernel lattice failed saturation check");
  return basis;
}

bool generators_saturated(const IntMatrix& generators) {
  if (generators.rows() == 0) return true;
  const SmithForm sf = smith_normal_form(generators);
  return std::all_of(sf.diagonal.begin(), sf.diagonal.end(),
                     [](const Integer& d) { return d == 0 || d == 1; });
}

bool is_saturated(const LatticeBasis& basis) { return generators_saturated(basis.matrix()); }

}  // namespace crnem::intlat
