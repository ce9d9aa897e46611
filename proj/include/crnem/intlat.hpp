#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace crnem::intlat {

using Integer = mpz_class;

/// Dense matrix of arbitrary-precision integers, row-major.
class IntMatrix {
 public:
  IntMatrix() = default;
  IntMatrix(std::size_t rows, std::size_t cols);
  IntMatrix(std::initializer_list<std::initializer_list<long>> rows);

  static IntMatrix identity(std::size_t n);
  static IntMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

  Integer& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const Integer& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::vector<Integer> row(std::size_t r) const;
  IntMatrix transpose() const;
  bool is_zero() const;

  void swap_rows(std::size_t a, std::size_t b);
  void swap_cols(std::size_t a, std::size_t b);

  /// Checked narrowing; throws OverflowError when an entry does not fit.
  std::int64_t at_int64(std::size_t r, std::size_t c) const;
  std::vector<std::vector<std::int64_t>> to_int64() const;

  std::string to_string() const;

  friend IntMatrix operator*(const IntMatrix& a, const IntMatrix& b);
  friend bool operator==(const IntMatrix& a, const IntMatrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Integer> data_;
};

struct HermiteForm {
  IntMatrix H;  ///< row echelon, positive pivots, entries above pivots in [0, pivot)
  IntMatrix U;  ///< unimodular, H = U * M
};

struct SmithForm {
  std::vector<Integer> diagonal;  ///< min(rows, cols) entries, d1 | d2 | ...
  IntMatrix U;                    ///< unimodular, rows x rows
  IntMatrix V;                    ///< unimodular, cols x cols; U * M * V is diagonal
};

HermiteForm hermite_normal_form(const IntMatrix& m);
SmithForm smith_normal_form(const IntMatrix& m);

/// Exact determinant of a square matrix (fraction-free elimination).
Integer determinant(const IntMatrix& m);
std::size_t rank(const IntMatrix& m);

/// Linearly independent, nonzero integer vectors in Z^n; stored as matrix rows.
class LatticeBasis {
 public:
  explicit LatticeBasis(std::size_t ambient_dim);
  LatticeBasis(std::size_t ambient_dim, IntMatrix vectors);
  static LatticeBasis from_vectors(const std::vector<std::vector<std::int64_t>>& vectors);

  std::size_t ambient_dim() const noexcept { return ambient_dim_; }
  std::size_t size() const noexcept { return vectors_.rows(); }
  const IntMatrix& matrix() const noexcept { return vectors_; }
  std::vector<Integer> vector(std::size_t l) const { return vectors_.row(l); }

 private:
  std::size_t ambient_dim_;
  IntMatrix vectors_;
};

/// Basis of the saturated lattice ker(S) ∩ Z^n, HNF-reduced so that each
/// vector's first nonzero entry is positive.
LatticeBasis integer_kernel_basis(const IntMatrix& s);

/// True iff the lattice generated by the basis is saturated.
bool is_saturated(const LatticeBasis& basis);

/// Same test for an arbitrary generating set (rows, possibly dependent).
bool generators_saturated(const IntMatrix& generators);

}  // namespace crnem::intlat
