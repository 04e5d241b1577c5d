#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace kaug {

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

inline void require_finite(const std::vector<double>& entries, const char* what) {
  for (double x : entries) {
    if (!std::isfinite(x))
      throw std::invalid_argument(std::string(what) + ": non-finite entry");
  }
}

}  // namespace detail

/// Dense real vector. Entries are checked finite on construction from data;
/// in-place mutation through operator[] is unchecked.
class Vector {
 public:
  Vector() = default;
  explicit Vector(std::size_t len) : e_(len, 0.0) {}
  Vector(std::initializer_list<double> init) : e_(init) {
    detail::require_finite(e_, "Vector");
  }
  explicit Vector(std::vector<double> entries) : e_(std::move(entries)) {
    detail::require_finite(e_, "Vector");
  }

  std::size_t size() const { return e_.size(); }
  double& operator[](std::size_t i) { return e_[i]; }
  double operator[](std::size_t i) const { return e_[i]; }
  double* data() { return e_.data(); }
  const double* data() const { return e_.data(); }
  auto begin() const { return e_.begin(); }
  auto end() const { return e_.end(); }
  const std::vector<double>& entries() const { return e_; }

 private:
  std::vector<double> e_;
};

inline double dot(const Vector& a, const Vector& b) {
  detail::require(a.size() == b.size(), "dot: length mismatch");
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += (long double)a[i] * b[i];
  return (double)s;
}

inline double norm(const Vector& a) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < a.size(); ++i) s += (long double)a[i] * a[i];
  return std::sqrt((double)s);
}

inline Vector operator+(const Vector& a, const Vector& b) {
  detail::require(a.size() == b.size(), "vector +: length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector operator-(const Vector& a, const Vector& b) {
  detail::require(a.size() == b.size(), "vector -: length mismatch");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector operator*(double s, const Vector& a) {
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = s * a[i];
  return r;
}

/// y += alpha * x
inline void axpy(double alpha, const Vector& x, Vector& y) {
  detail::require(x.size() == y.size(), "axpy: length mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Dense real matrix, row-major. Entries checked finite on construction
/// from data.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), e_(rows * cols, 0.0) {}
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), e_(std::move(entries)) {
    detail::require(e_.size() == rows_ * cols_,
                    "DenseMatrix: entries length != rows*cols");
    detail::require_finite(e_, "DenseMatrix");
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return e_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return e_[i * cols_ + j];
  }

  std::span<const double> row(std::size_t i) const {
    return {e_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {e_.data() + i * cols_, cols_};
  }

  Vector col_copy(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  void set_col(std::size_t j, const Vector& c) {
    detail::require(c.size() == rows_, "set_col: length mismatch");
    for (std::size_t i = 0; i < rows_; ++i) (*this)(i, j) = c[i];
  }

  /// Rows [r0, r1) as a new matrix.
  DenseMatrix row_block(std::size_t r0, std::size_t r1) const {
    detail::require(r0 <= r1 && r1 <= rows_, "row_block: bad range");
    DenseMatrix b(r1 - r0, cols_);
    for (std::size_t i = r0; i < r1; ++i)
      for (std::size_t j = 0; j < cols_; ++j) b(i - r0, j) = (*this)(i, j);
    return b;
  }

  const std::vector<double>& entries() const { return e_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> e_;
};

/// Relative cutoff separating numerically zero singular values from the
/// nearly singular regime under study.
struct RankTolerance {
  double relative = 1e-10;

  RankTolerance() = default;
  explicit RankTolerance(double rel) : relative(rel) {
    detail::require(rel > 0.0 && rel < 1.0, "RankTolerance: must be in (0,1)");
  }
};

inline Vector matvec(const DenseMatrix& m, const Vector& v) {
  detail::require(m.cols() == v.size(), "matvec: dimension mismatch");
  Vector r(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto ri = m.row(i);
    long double s = 0.0L;
    for (std::size_t j = 0; j < m.cols(); ++j) s += (long double)ri[j] * v[j];
    r[i] = (double)s;
  }
  return r;
}

/// M^T v without forming the transpose.
inline Vector matvec_transposed(const DenseMatrix& m, const Vector& v) {
  detail::require(m.rows() == v.size(), "matvec_transposed: dimension mismatch");
  Vector r(m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto ri = m.row(i);
    const double vi = v[i];
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += ri[j] * vi;
  }
  return r;
}

inline DenseMatrix transpose(const DenseMatrix& m) {
  DenseMatrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.cols() == b.rows(), "matmul: dimension mismatch");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto bk = b.row(k);
      auto ci = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

inline DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "matrix +: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) + b(i, j);
  return c;
}

inline DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require(a.rows() == b.rows() && a.cols() == b.cols(),
                  "matrix -: shape mismatch");
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j) - b(i, j);
  return c;
}

inline DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = s * a(i, j);
  return c;
}

inline double frobenius_norm(const DenseMatrix& m) {
  long double s = 0.0L;
  for (double x : m.entries()) s += (long double)x * x;
  return std::sqrt((double)s);
}

/// Stack [top; bottom] by rows.
inline DenseMatrix vstack(const DenseMatrix& top, const DenseMatrix& bottom) {
  detail::require(top.cols() == bottom.cols(), "vstack: column mismatch");
  DenseMatrix m(top.rows() + bottom.rows(), top.cols());
  for (std::size_t i = 0; i < top.rows(); ++i)
    for (std::size_t j = 0; j < top.cols(); ++j) m(i, j) = top(i, j);
  for (std::size_t i = 0; i < bottom.rows(); ++i)
    for (std::size_t j = 0; j < bottom.cols(); ++j)
      m(top.rows() + i, j) = bottom(i, j);
  return m;
}

}  // namespace kaug
