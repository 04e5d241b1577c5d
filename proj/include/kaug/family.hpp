#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kaug/linalg.hpp"
#include "kaug/matrix.hpp"

namespace kaug {

/// A parameterized matrix family eps -> (A0(eps), A1(eps), b(eps)) with
/// limit data at eps = 0. The declared eps grid doubles as the sample set
/// for the grid-extremum constants eta0, eta1, C2.
struct NearSingularFamily {
  std::function<DenseMatrix(double)> a0;  // m0 x n
  std::function<DenseMatrix(double)> a1;  // m1 x n
  std::function<Vector(double)> rhs;      // length m0 + m1
  std::optional<DenseMatrix> pi;          // m1 x m0
  double eps_bar = 0.0;
  std::size_t m0 = 0;
  std::vector<double> eps_grid;  // strictly decreasing, in (0, eps_bar]

  DenseMatrix matrix(double eps) const { return vstack(a0(eps), a1(eps)); }

  std::size_t row_count() const { return matrix(eps_grid.at(0)).rows(); }
  std::size_t m1_count() const { return row_count() - m0; }
};

/// eta0/eta1 are the extreme diagonal entries of A(eps) A(eps)^T over the
/// declared grid; C2 the grid maximum of ||A(eps)||.
struct FamilyGridConstants {
  double eta0 = 0.0;
  double eta1 = 0.0;
  double c2 = 0.0;
};

namespace detail {

inline Vector row_norms_squared(const DenseMatrix& a) {
  Vector d(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ri = a.row(i);
    long double s = 0.0L;
    for (double x : ri) s += (long double)x * x;
    d[i] = (double)s;
  }
  return d;
}

struct FamilyError : std::runtime_error {
  explicit FamilyError(const std::string& clause, const std::string& what)
      : std::runtime_error(clause + ": " + what) {}
};

}  // namespace detail

/// The coupling matrix of Def. 3.1(iii): the stored one, or A1(0) A0(0)^+
/// when absent. The recovery residual is checked by validate_family.
inline DenseMatrix recovered_pi(const NearSingularFamily& fam,
                                RankTolerance tol = RankTolerance()) {
  if (fam.pi) return *fam.pi;
  const DenseMatrix a0 = fam.a0(0.0);
  const DenseMatrix a1 = fam.a1(0.0);
  // A1(0) A0(0)^+ row by row: pi_i = (A0^+)^T a1_i = minimum-norm solution
  // of A0^T x = a1_i read through the SVD of A0.
  SvdResult s = svd(a0);
  const std::size_t r = s.rank(tol);
  DenseMatrix pi(a1.rows(), a0.rows());
  for (std::size_t i = 0; i < a1.rows(); ++i) {
    for (std::size_t k = 0; k < r; ++k) {
      long double vk_a1 = 0.0L;
      for (std::size_t j = 0; j < a0.cols(); ++j)
        vk_a1 += (long double)s.v(j, k) * a1(i, j);
      const double coef = (double)vk_a1 / s.sigma[k];
      for (std::size_t p = 0; p < a0.rows(); ++p)
        pi(i, p) += coef * s.u(p, k);
    }
  }
  return pi;
}

inline FamilyGridConstants family_grid_constants(const NearSingularFamily& fam) {
  FamilyGridConstants c;
  c.eta0 = std::numeric_limits<double>::infinity();
  for (double eps : fam.eps_grid) {
    const DenseMatrix a = fam.matrix(eps);
    const Vector d = detail::row_norms_squared(a);
    for (std::size_t i = 0; i < d.size(); ++i) {
      c.eta0 = std::min(c.eta0, d[i]);
      c.eta1 = std::max(c.eta1, d[i]);
    }
    c.c2 = std::max(c.c2, spectral_norm(a));
  }
  return c;
}

/// Structural checks: two-block shape, positive diagonal, Pi consistency,
/// consistency of the right-hand side. Throws naming the violated clause.
inline void validate_family(const NearSingularFamily& fam,
                            RankTolerance tol = RankTolerance()) {
  if (fam.eps_grid.empty())
    throw detail::FamilyError("grid", "eps grid is empty");
  for (std::size_t i = 0; i < fam.eps_grid.size(); ++i) {
    const double e = fam.eps_grid[i];
    if (!(e > 0.0 && e <= fam.eps_bar))
      throw detail::FamilyError("grid", "eps value outside (0, eps_bar]");
    if (i > 0 && !(e < fam.eps_grid[i - 1]))
      throw detail::FamilyError("grid", "eps grid not strictly decreasing");
  }

  const DenseMatrix a0_lim = fam.a0(0.0);
  const DenseMatrix a1_lim = fam.a1(0.0);
  if (a0_lim.rows() != fam.m0)
    throw detail::FamilyError("blocks", "A0 row count != m0");
  if (a0_lim.cols() != a1_lim.cols())
    throw detail::FamilyError("blocks", "A0/A1 column counts differ");

  for (double eps : fam.eps_grid) {
    const DenseMatrix a0 = fam.a0(eps);
    const DenseMatrix a1 = fam.a1(eps);
    if (a0.rows() != a0_lim.rows() || a0.cols() != a0_lim.cols() ||
        a1.rows() != a1_lim.rows() || a1.cols() != a1_lim.cols())
      throw detail::FamilyError("blocks", "block shapes vary with eps");
    const DenseMatrix a = vstack(a0, a1);
    const Vector d = detail::row_norms_squared(a);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!(d[i] > 0.0))
        throw detail::FamilyError("diagonal-bound",
                                  "zero diagonal entry in A A^T");

    const Vector b = fam.rhs(eps);
    if (b.size() != a.rows())
      throw detail::FamilyError("blocks", "rhs length != row count");
    const double bn = norm(b);
    const Vector res = matvec(a, min_norm_least_squares(a, b, tol)) - b;
    if (norm(res) > 1e-8 * std::max(bn, 1e-300))
      throw detail::FamilyError("consistency", "b not in range(A)");
  }

  const double a1n = spectral_norm(a1_lim);
  const DenseMatrix pi = recovered_pi(fam, tol);
  const double res = spectral_norm(a1_lim - matmul(pi, a0_lim));
  const double bound = (fam.pi ? 1e-10 : 1e-8) * a1n;
  if (a1n > 0.0 && res > bound)
    throw detail::FamilyError("near-singularity(iii)",
                              "A1(0) != Pi A0(0) beyond tolerance");
}

/// Near-singularity structure on the declared grid, three clauses:
///   (i)   rank(A0(eps)) < rank(A(eps)) for every grid eps,
///   (ii)  rank(A0(eps)) constant down to eps = 0,
///   (iii) A1(0) = Pi A0(0) (checked by validate_family).
/// Throws naming the violated clause.
inline void check_nearly_singular(const NearSingularFamily& fam,
                                  RankTolerance tol = RankTolerance()) {
  validate_family(fam, tol);
  const std::size_t r0_lim = svd(fam.a0(0.0)).rank(tol);
  for (double eps : fam.eps_grid) {
    const std::size_t r0 = svd(fam.a0(eps)).rank(tol);
    const std::size_t r = svd(fam.matrix(eps)).rank(tol);
    if (!(r0 < r))
      throw detail::FamilyError("near-singularity(i)",
                                "rank(A0) not below rank(A) at eps=" +
                                    std::to_string(eps));
    if (r0 != r0_lim)
      throw detail::FamilyError("near-singularity(ii)",
                                "rank(A0(eps)) != rank(A0(0)) at eps=" +
                                    std::to_string(eps));
  }
}

}  // namespace kaug
