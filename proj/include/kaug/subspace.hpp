#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>

#include "kaug/linalg.hpp"
#include "kaug/matrix.hpp"

namespace kaug {

/// A linear subspace of R^n held as an orthonormal basis (n x dim).
class Subspace {
 public:
  Subspace(std::size_t ambient_dim, DenseMatrix basis)
      : ambient_(ambient_dim), basis_(std::move(basis)) {
    detail::require(basis_.rows() == ambient_, "Subspace: basis row count");
    detail::require(basis_.cols() <= ambient_, "Subspace: dim > ambient");
    long double err2 = 0.0L;
    for (std::size_t a = 0; a < basis_.cols(); ++a) {
      for (std::size_t b = a; b < basis_.cols(); ++b) {
        long double s = 0.0L;
        for (std::size_t i = 0; i < ambient_; ++i)
          s += (long double)basis_(i, a) * basis_(i, b);
        const long double d = s - (a == b ? 1.0L : 0.0L);
        err2 += (a == b ? 1.0L : 2.0L) * d * d;
      }
    }
    detail::require(std::sqrt((double)err2) <= 1e-10,
                    "Subspace: basis not orthonormal");
  }

  static Subspace zero(std::size_t ambient_dim) {
    return Subspace(ambient_dim, DenseMatrix(ambient_dim, 0));
  }

  std::size_t ambient_dim() const { return ambient_; }
  std::size_t dim() const { return basis_.cols(); }
  const DenseMatrix& basis() const { return basis_; }

  /// Dense orthogonal projector basis * basis^T.
  DenseMatrix projector() const {
    return matmul(basis_, transpose(basis_));
  }

 private:
  std::size_t ambient_;
  DenseMatrix basis_;
};

/// Canonical angles in radians, sorted nonincreasing (theta_1 first).
struct AngleProfile {
  Vector angles;

  double largest() const { return angles.size() == 0 ? 0.0 : angles[0]; }
};

namespace detail {

inline double clamped_acos(double x) {
  return std::acos(std::clamp(x, 0.0, 1.0));
}

}  // namespace detail

/// Orthonormal basis of ker(M) at the numerical rank set by tol.
inline Subspace null_space_basis(const DenseMatrix& m,
                                 RankTolerance tol = RankTolerance()) {
  return Subspace(m.cols(), null_space_basis_matrix(m, tol));
}

/// Span of the columns of M (numerical rank set by tol).
inline Subspace column_space_basis(const DenseMatrix& m,
                                   RankTolerance tol = RankTolerance()) {
  SvdResult s = svd(m);
  const std::size_t r = s.rank(tol);
  DenseMatrix basis(m.rows(), r);
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < r; ++j) basis(i, j) = s.u(i, j);
  return Subspace(m.rows(), std::move(basis));
}

/// Span of the rows of M.
inline Subspace row_space_basis(const DenseMatrix& m,
                                RankTolerance tol = RankTolerance()) {
  SvdResult s = svd(m);
  const std::size_t r = s.rank(tol);
  DenseMatrix basis(m.cols(), r);
  for (std::size_t i = 0; i < m.cols(); ++i)
    for (std::size_t j = 0; j < r; ++j) basis(i, j) = s.v(i, j);
  return Subspace(m.cols(), std::move(basis));
}

/// Canonical angles between equal-dimensional subspaces: arccos of the
/// singular values of U^T W, independent of the basis choice.
inline AngleProfile canonical_angles(const Subspace& u, const Subspace& w) {
  detail::require(u.ambient_dim() == w.ambient_dim(),
                  "canonical_angles: ambient dimension mismatch");
  detail::require(u.dim() == w.dim(), "canonical_angles: subspace dims differ");
  detail::require(u.dim() >= 1, "canonical_angles: zero-dimensional subspace");
  SvdResult s = svd(matmul(transpose(u.basis()), w.basis()));
  const std::size_t p = u.dim();
  Vector angles(p);
  // sigma is nonincreasing, so arccos values come out nondecreasing;
  // store largest-first.
  for (std::size_t i = 0; i < p; ++i)
    angles[i] = detail::clamped_acos(s.sigma[p - 1 - i]);
  return {std::move(angles)};
}

/// Gap metric ||P_U - P_W||; equals sin(theta_1).
inline double gap_metric(const Subspace& u, const Subspace& w) {
  detail::require(u.ambient_dim() == w.ambient_dim(),
                  "gap_metric: ambient dimension mismatch");
  detail::require(u.dim() == w.dim(), "gap_metric: subspace dims differ");
  return spectral_norm(u.projector() - w.projector());
}

/// P_W v = basis (basis^T v).
inline Vector projector_apply(const Subspace& w, const Vector& v) {
  detail::require(v.size() == w.ambient_dim(),
                  "projector_apply: dimension mismatch");
  return matvec(w.basis(), matvec_transposed(w.basis(), v));
}

/// Angle between a nonzero vector and a subspace:
/// arccos(||P_W u|| / ||u||), the ratio clamped to [0,1].
inline double angle_to_subspace(const Vector& u, const Subspace& w) {
  detail::require(u.size() == w.ambient_dim(),
                  "angle_to_subspace: dimension mismatch");
  const double un = norm(u);
  detail::require(un > 0.0, "angle_to_subspace: zero vector");
  if (w.dim() == 0) return std::numbers::pi / 2.0;
  return detail::clamped_acos(norm(projector_apply(w, u)) / un);
}

/// Approximate dual kernel ker(A0 A^T), with A0 the first m0 rows of A.
inline Subspace approximate_dual_kernel(const DenseMatrix& a, std::size_t m0,
                                        RankTolerance tol = RankTolerance()) {
  detail::require(m0 >= 1 && m0 < a.rows(),
                  "approximate_dual_kernel: m0 out of range");
  const DenseMatrix a0 = a.row_block(0, m0);
  return null_space_basis(matmul(a0, transpose(a)), tol);
}

/// Approximate kernel ker(A0) /\ row(A), computed as the orthonormalized
/// image A^T * dappker. The rank cut is taken relative to ||A||, so image
/// directions that are numerically zero at the scale of A are dropped and
/// the result degrades gracefully when the image loses dimensions.
inline Subspace approximate_kernel(const DenseMatrix& a, std::size_t m0,
                                   RankTolerance tol = RankTolerance()) {
  detail::require(m0 >= 1 && m0 < a.rows(),
                  "approximate_kernel: m0 out of range");
  Subspace dual = approximate_dual_kernel(a, m0, tol);
  if (dual.dim() == 0) return Subspace::zero(a.cols());
  SvdResult s = svd(matmul(transpose(a), dual.basis()));
  const double cut = tol.relative * spectral_norm(a);
  std::size_t r = 0;
  while (r < s.sigma.size() && s.sigma[r] > cut) ++r;
  DenseMatrix basis(a.cols(), r);
  for (std::size_t i = 0; i < a.cols(); ++i)
    for (std::size_t j = 0; j < r; ++j) basis(i, j) = s.u(i, j);
  return Subspace(a.cols(), std::move(basis));
}

/// Precomputed applicator for Rhat v = S (S^T A A^T S)^{-1} S^T v, the
/// projection onto the dual kernel used by the kernel step of the dual
/// iterations. Requires full-row-rank A; if S^T A A^T S is numerically
/// rank-deficient the Cholesky route fails and an SVD pseudoinverse is
/// used only when explicitly opted in.
class DualKernelProjector {
 public:
  static DualKernelProjector build(const DenseMatrix& a, const Subspace& s,
                                   bool allow_pseudoinverse = false,
                                   RankTolerance tol = RankTolerance()) {
    detail::require(s.ambient_dim() == a.rows(),
                    "DualKernelProjector: basis ambient dim != rows");
    if (svd(a).rank(tol) != a.rows())
      throw std::invalid_argument("DualKernelProjector: A not full row rank");
    DualKernelProjector p;
    p.s_ = s.basis();
    if (s.dim() == 0) return p;  // zero operator
    const DenseMatrix at_s = matmul(transpose(a), p.s_);
    const DenseMatrix core = matmul(transpose(at_s), at_s);  // S^T A A^T S
    try {
      p.chol_ = CholeskyFactor::compute(core);
    } catch (const std::runtime_error&) {
      if (!allow_pseudoinverse) throw;
      p.pinv_core_ = svd(core);
    }
    return p;
  }

  std::size_t dim() const { return s_.cols(); }
  std::size_t ambient_dim() const { return s_.rows(); }
  bool pseudoinverse_mode() const { return pinv_core_.has_value(); }

  Vector apply(const Vector& v) const {
    detail::require(v.size() == s_.rows(),
                    "DualKernelProjector: dimension mismatch");
    if (s_.cols() == 0) return Vector(v.size());
    Vector t = matvec_transposed(s_, v);
    Vector z = chol_ ? chol_->solve(t) : pinv_solve(t);
    return matvec(s_, z);
  }

 private:
  Vector pinv_solve(const Vector& t) const {
    const SvdResult& f = *pinv_core_;
    const std::size_t r = f.rank();
    Vector z(t.size());
    for (std::size_t k = 0; k < r; ++k) {
      long double s = 0.0L;
      for (std::size_t i = 0; i < t.size(); ++i)
        s += (long double)f.u(i, k) * t[i];
      const double coef = (double)s / f.sigma[k];
      for (std::size_t i = 0; i < t.size(); ++i) z[i] += coef * f.v(i, k);
    }
    return z;
  }

  DenseMatrix s_;  // m x k, orthonormal columns
  std::optional<CholeskyFactor> chol_;
  std::optional<SvdResult> pinv_core_;
};

}  // namespace kaug
