#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "kaug/matrix.hpp"

namespace kaug {

struct QrResult {
  DenseMatrix q;  // orthonormal columns
  DenseMatrix r;  // upper triangular
};

struct SvdResult {
  DenseMatrix u;  // rows x k, orthonormal columns
  Vector sigma;   // k, nonincreasing, nonnegative
  DenseMatrix v;  // cols x k, orthonormal columns

  std::size_t rank(RankTolerance tol = RankTolerance()) const {
    if (sigma.size() == 0) return 0;
    const double cut = tol.relative * sigma[0];
    std::size_t r = 0;
    while (r < sigma.size() && sigma[r] > cut) ++r;
    return r;
  }
};

namespace detail {

/// Householder QR of an m x n matrix, m >= n. Returns Q with either n
/// (thin) or m (full) columns; R is the upper-triangular n x n block.
inline QrResult householder_qr(const DenseMatrix& m, bool full_q) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  require(rows >= cols, "householder_qr: requires rows >= cols");

  DenseMatrix a = m;
  // Reflector k lives in column k, rows k..rows-1.
  std::vector<std::vector<double>> reflectors(cols);

  for (std::size_t k = 0; k < cols; ++k) {
    long double nrm2 = 0.0L;
    for (std::size_t i = k; i < rows; ++i)
      nrm2 += (long double)a(i, k) * a(i, k);
    const double nrm = std::sqrt((double)nrm2);
    std::vector<double>& v = reflectors[k];
    v.assign(rows - k, 0.0);
    if (nrm == 0.0) continue;  // column already zero below the diagonal

    const double alpha = (a(k, k) >= 0.0) ? -nrm : nrm;
    v[0] = a(k, k) - alpha;
    for (std::size_t i = k + 1; i < rows; ++i) v[i - k] = a(i, k);
    long double vn2 = 0.0L;
    for (double x : v) vn2 += (long double)x * x;
    const double vn = std::sqrt((double)vn2);
    if (vn == 0.0) {
      v.assign(rows - k, 0.0);
      continue;
    }
    for (double& x : v) x /= vn;

    // Apply H = I - 2 v v^T to the trailing block of a.
    for (std::size_t j = k; j < cols; ++j) {
      long double s = 0.0L;
      for (std::size_t i = k; i < rows; ++i)
        s += (long double)v[i - k] * a(i, j);
      const double tau = 2.0 * (double)s;
      for (std::size_t i = k; i < rows; ++i) a(i, j) -= tau * v[i - k];
    }
    a(k, k) = alpha;
    for (std::size_t i = k + 1; i < rows; ++i) a(i, k) = 0.0;
  }

  DenseMatrix r(cols, cols);
  for (std::size_t i = 0; i < cols; ++i)
    for (std::size_t j = i; j < cols; ++j) r(i, j) = a(i, j);

  const std::size_t qcols = full_q ? rows : cols;
  DenseMatrix q(rows, qcols);
  for (std::size_t j = 0; j < qcols; ++j) q(j, j) = 1.0;
  // Accumulate Q = H_0 H_1 ... H_{n-1} by applying reflectors in reverse.
  for (std::size_t kk = cols; kk-- > 0;) {
    const std::vector<double>& v = reflectors[kk];
    long double vn2 = 0.0L;
    for (double x : v) vn2 += (long double)x * x;
    if ((double)vn2 == 0.0) continue;
    for (std::size_t j = 0; j < qcols; ++j) {
      long double s = 0.0L;
      for (std::size_t i = kk; i < rows; ++i)
        s += (long double)v[i - kk] * q(i, j);
      const double tau = 2.0 * (double)s;
      for (std::size_t i = kk; i < rows; ++i) q(i, j) -= tau * v[i - kk];
    }
  }
  return {std::move(q), std::move(r)};
}

/// One-sided Jacobi on a tall matrix (rows >= cols), long double working
/// storage. Singular values come out with high relative accuracy, which
/// the nearly singular regime needs.
inline SvdResult jacobi_svd_tall(const DenseMatrix& m) {
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();

  std::vector<std::vector<long double>> w(cols),
      v(cols);  // column storage
  for (std::size_t j = 0; j < cols; ++j) {
    w[j].resize(rows);
    for (std::size_t i = 0; i < rows; ++i) w[j][i] = m(i, j);
    v[j].assign(cols, 0.0L);
    v[j][j] = 1.0L;
  }

  constexpr long double kOrthTol = 1e-17L;
  constexpr int kMaxSweeps = 60;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        long double app = 0.0L, aqq = 0.0L, apq = 0.0L;
        for (std::size_t i = 0; i < rows; ++i) {
          app += w[p][i] * w[p][i];
          aqq += w[q][i] * w[q][i];
          apq += w[p][i] * w[q][i];
        }
        if (app == 0.0L || aqq == 0.0L) continue;
        if (std::abs(apq) <= kOrthTol * std::sqrt(app * aqq)) continue;
        rotated = true;

        const long double tau = (aqq - app) / (2.0L * apq);
        const long double t =
            (tau >= 0.0L ? 1.0L : -1.0L) /
            (std::abs(tau) + std::sqrt(1.0L + tau * tau));
        const long double cs = 1.0L / std::sqrt(1.0L + t * t);
        const long double sn = cs * t;
        for (std::size_t i = 0; i < rows; ++i) {
          const long double wp = w[p][i], wq = w[q][i];
          w[p][i] = cs * wp - sn * wq;
          w[q][i] = sn * wp + cs * wq;
        }
        for (std::size_t i = 0; i < cols; ++i) {
          const long double vp = v[p][i], vq = v[q][i];
          v[p][i] = cs * vp - sn * vq;
          v[q][i] = sn * vp + cs * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<long double> sig(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < rows; ++i) s += w[j][i] * w[j][i];
    sig[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(cols);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sig[a] > sig[b]; });

  DenseMatrix u(rows, cols), vv(cols, cols);
  Vector sigma(cols);
  for (std::size_t j = 0; j < cols; ++j) {
    const std::size_t src = order[j];
    sigma[j] = (double)sig[src];
    for (std::size_t i = 0; i < cols; ++i) vv(i, j) = (double)v[src][i];
    if (sig[src] > 0.0L) {
      for (std::size_t i = 0; i < rows; ++i)
        u(i, j) = (double)(w[src][i] / sig[src]);
    }
  }
  // Structurally zero columns: fill in an orthonormal completion so U
  // keeps orthonormal columns.
  for (std::size_t j = 0; j < cols; ++j) {
    if (sigma[j] > 0.0) continue;
    for (std::size_t cand = 0; cand < rows; ++cand) {
      Vector e(rows);
      e[cand] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < cols; ++k) {
          if (k == j || (sigma[k] == 0.0 && k > j)) continue;
          long double s = 0.0L;
          for (std::size_t i = 0; i < rows; ++i)
            s += (long double)u(i, k) * e[i];
          for (std::size_t i = 0; i < rows; ++i)
            e[i] -= (double)s * u(i, k);
        }
      }
      const double en = norm(e);
      if (en > 0.5) {
        for (std::size_t i = 0; i < rows; ++i) u(i, j) = e[i] / en;
        break;
      }
    }
  }
  return {std::move(u), std::move(sigma), std::move(vv)};
}

}  // namespace detail

/// Householder thin QR. Rank deficiency is allowed; R may carry tiny
/// diagonal entries.
inline QrResult thin_qr(const DenseMatrix& m) {
  detail::require(m.rows() >= m.cols(), "thin_qr: requires rows >= cols");
  return detail::householder_qr(m, /*full_q=*/false);
}

/// Singular value decomposition M = U diag(sigma) V^T via one-sided Jacobi.
inline SvdResult svd(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) {
    return {DenseMatrix(m.rows(), 0), Vector(0), DenseMatrix(m.cols(), 0)};
  }
  if (m.rows() >= m.cols()) return detail::jacobi_svd_tall(m);
  SvdResult t = detail::jacobi_svd_tall(transpose(m));
  return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
}

/// sigma_max(M).
inline double spectral_norm(const DenseMatrix& m) {
  SvdResult s = svd(m);
  return s.sigma.size() == 0 ? 0.0 : s.sigma[0];
}

/// Minimum-norm least-squares solution x = A^+ b, with singular values
/// below tol.relative * sigma_max treated as zero. The result lies in
/// row(A).
inline Vector min_norm_least_squares(const DenseMatrix& a, const Vector& b,
                                     RankTolerance tol = RankTolerance()) {
  detail::require(b.size() == a.rows(), "min_norm_least_squares: b length");
  SvdResult s = svd(a);
  const std::size_t r = s.rank(tol);
  Vector x(a.cols());
  for (std::size_t k = 0; k < r; ++k) {
    long double uk_b = 0.0L;
    for (std::size_t i = 0; i < a.rows(); ++i)
      uk_b += (long double)s.u(i, k) * b[i];
    const double coef = (double)uk_b / s.sigma[k];
    for (std::size_t j = 0; j < a.cols(); ++j) x[j] += coef * s.v(j, k);
  }
  return x;
}

/// Orthonormal basis of the orthogonal complement of span(basis) in R^n,
/// where basis is n x k with linearly independent columns.
inline DenseMatrix orthonormal_complement(const DenseMatrix& basis) {
  const std::size_t n = basis.rows();
  const std::size_t k = basis.cols();
  detail::require(k <= n, "orthonormal_complement: more columns than rows");
  if (k == 0) return DenseMatrix::identity(n);
  QrResult qr = detail::householder_qr(basis, /*full_q=*/true);
  DenseMatrix c(n, n - k);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = k; j < n; ++j) c(i, j - k) = qr.q(i, j);
  return c;
}

/// Orthonormal columns spanning {v : Mv = 0} at the numerical rank set by
/// tol. Returned as a plain matrix; the subspace wrapper sits one layer up.
inline DenseMatrix null_space_basis_matrix(const DenseMatrix& m,
                                           RankTolerance tol = RankTolerance()) {
  const std::size_t n = m.cols();
  if (m.rows() == 0) return DenseMatrix::identity(n);
  SvdResult s = svd(m);
  const std::size_t r = s.rank(tol);
  DenseMatrix row_basis(n, r);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < r; ++j) row_basis(i, j) = s.v(i, j);
  return orthonormal_complement(row_basis);
}

/// Extremal eigenvalues (lambda_min_plus, lambda_max) of a symmetric
/// positive semidefinite matrix. lambda_min_plus is the smallest eigenvalue
/// exceeding tol.relative * lambda_max.
inline std::pair<double, double> sym_eig_extremes(
    const DenseMatrix& m, RankTolerance tol = RankTolerance()) {
  detail::require(m.rows() == m.cols(), "sym_eig_extremes: matrix not square");
  const double scale = frobenius_norm(m);
  if (scale == 0.0) return {0.0, 0.0};
  long double asym = 0.0L;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j) {
      const double d = m(i, j) - m(j, i);
      asym += 2.0L * (long double)d * d;
    }
  detail::require(std::sqrt((double)asym) <= 1e-12 * scale,
                  "sym_eig_extremes: matrix not symmetric");

  SvdResult s = svd(m);
  const double lmax = s.sigma[0];
  const double cut = tol.relative * lmax;
  double lmin_plus = 0.0;
  for (std::size_t i = 0; i < s.sigma.size(); ++i)
    if (s.sigma[i] > cut) lmin_plus = s.sigma[i];
  return {lmin_plus, lmax};
}

/// Cholesky factorization of an SPD matrix; a non-positive pivot throws.
class CholeskyFactor {
 public:
  static CholeskyFactor compute(const DenseMatrix& m) {
    detail::require(m.rows() == m.cols(), "cholesky: matrix not square");
    const std::size_t n = m.rows();
    DenseMatrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
      long double diag = m(j, j);
      for (std::size_t k = 0; k < j; ++k)
        diag -= (long double)l(j, k) * l(j, k);
      if (!((double)diag > 0.0))
        throw std::runtime_error("cholesky: matrix not SPD");
      l(j, j) = std::sqrt((double)diag);
      for (std::size_t i = j + 1; i < n; ++i) {
        long double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k)
          s -= (long double)l(i, k) * l(j, k);
        l(i, j) = (double)s / l(j, j);
      }
    }
    CholeskyFactor f;
    f.l_ = std::move(l);
    return f;
  }

  Vector solve(const Vector& b) const {
    const std::size_t n = l_.rows();
    detail::require(b.size() == n, "cholesky solve: length mismatch");
    Vector y(n);
    for (std::size_t i = 0; i < n; ++i) {
      long double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= (long double)l_(i, k) * y[k];
      y[i] = (double)s / l_(i, i);
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
      long double s = y[i];
      for (std::size_t k = i + 1; k < n; ++k)
        s -= (long double)l_(k, i) * x[k];
      x[i] = (double)s / l_(i, i);
    }
    return x;
  }

  std::size_t dim() const { return l_.rows(); }

 private:
  DenseMatrix l_;
};

/// Solve Mx = b for symmetric positive definite M.
inline Vector solve_spd(const DenseMatrix& m, const Vector& b) {
  return CholeskyFactor::compute(m).solve(b);
}

}  // namespace kaug
